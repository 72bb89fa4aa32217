"""Conic programs in standard form and the interior-point backend that solves them.

A :class:`ConeProgram` is ``minimize c'x + offset`` subject to
``A x + s = b`` with ``s`` in a product of zero, nonnegative, second-order
and PSD cones. PSD blocks use the scaled upper-triangular vectorization
(column-major, off-diagonal entries multiplied by sqrt(2)); complex Hermitian
constraints arrive already lifted to real symmetric form. Solving is
delegated to Clarabel, a homogeneous self-dual embedding interior-point
method with Nesterov-Todd scaling.

Modeling code builds problems with cvxpy and hands them to
:func:`solve_problem`, which compiles to a :class:`ConeProgram`, calls
:func:`solve` and writes the solution back into the cvxpy variables.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import clarabel
import cvxpy as cp
import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200
RANK_ONE_WARN = 0.01
_INNER = 1e-2

CONE_KINDS = ("zero", "nonneg", "soc", "psd")

_STATUS = {
    "Solved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
    "AlmostDualInfeasible": UNBOUNDED,
}


class ExtractionError(ValueError):
    """Matrix handed to rank-one extraction is not PSD."""


def cone_size(kind, dim):
    if kind == "psd":
        return dim * (dim + 1) // 2
    return dim


@dataclass(frozen=True, eq=False)
class ConeProgram:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: tuple
    offset: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        A = sp.csc_matrix(self.A, dtype=float)
        cones = tuple((str(kind), int(dim)) for kind, dim in self.cones)
        for kind, dim in cones:
            if kind not in CONE_KINDS:
                raise ValueError(f"unknown cone kind {kind!r}")
            if dim < 0 or (kind in ("soc", "psd") and dim < 1):
                raise ValueError(f"bad {kind} cone dimension {dim}")
        total = sum(cone_size(kind, dim) for kind, dim in cones)
        if A.shape != (b.size, c.size) or total != b.size:
            raise ValueError(
                f"cone sizes ({total}) must partition the {b.size} rows of A{A.shape}"
            )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "cones", cones)

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.b.size

    def slices(self):
        """Row slice of each cone block, in order."""
        out, start = [], 0
        for kind, dim in self.cones:
            stop = start + cone_size(kind, dim)
            out.append((kind, dim, slice(start, stop)))
            start = stop
        return out

    @classmethod
    def from_problem(cls, problem):
        """Compile a cvxpy problem; returns ``(program, chain, inverse_data)``."""
        data, chain, inverse = problem.get_problem_data(
            cp.CLARABEL, solver_opts={"use_quad_obj": False}
        )
        if sp.issparse(data.get("P")) and data["P"].nnz:
            raise ValueError("quadratic objectives must be written in epigraph form")
        dims = data["dims"]
        if dims.exp or dims.p3d:
            raise ValueError("exponential and power cones are not supported")
        cones = [("zero", dims.zero), ("nonneg", dims.nonneg)]
        cones += [("soc", d) for d in dims.soc]
        cones += [("psd", d) for d in dims.psd]
        cones = [(k, d) for k, d in cones if not (k in ("zero", "nonneg") and d == 0)]
        offset = float(np.asarray(inverse[-1].get(cp.settings.OFFSET, 0.0)).item())
        return cls(data["c"], data["A"], data["b"], tuple(cones), offset), chain, inverse

    def dumps(self):
        """Self-describing text form: dimensions, cones and sparse triplets."""
        lines = ["coneprogram 1", f"vars {self.n_vars}", f"rows {self.n_rows}",
                 f"offset {self.offset!r}", f"cones {len(self.cones)}"]
        lines += [f"{kind} {dim}" for kind, dim in self.cones]
        nz_c = np.flatnonzero(self.c)
        lines.append(f"c {nz_c.size}")
        lines += [f"{i} {float(self.c[i])!r}" for i in nz_c]
        nz_b = np.flatnonzero(self.b)
        lines.append(f"b {nz_b.size}")
        lines += [f"{i} {float(self.b[i])!r}" for i in nz_b]
        coo = self.A.tocoo()
        lines.append(f"A {coo.nnz}")
        lines += [f"{i} {j} {float(v)!r}" for i, j, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        it = iter(text.splitlines())

        def header(name):
            key, value = next(it).split()
            if key != name:
                raise ValueError(f"expected {name!r}, found {key!r}")
            return value

        header("coneprogram")
        n = int(header("vars"))
        m = int(header("rows"))
        offset = float(header("offset"))
        cones = []
        for _ in range(int(header("cones"))):
            kind, dim = next(it).split()
            cones.append((kind, int(dim)))
        c = np.zeros(n)
        for _ in range(int(header("c"))):
            i, v = next(it).split()
            c[int(i)] = float(v)
        b = np.zeros(m)
        for _ in range(int(header("b"))):
            i, v = next(it).split()
            b[int(i)] = float(v)
        rows, cols, vals = [], [], []
        for _ in range(int(header("A"))):
            i, j, v = next(it).split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
        return cls(c, A, b, tuple(cones), offset)

    def dump(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


@dataclass(eq=False)
class ConeSolution:
    status: str
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    solve_time: float
    raw: object = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status == OPTIMAL


def _settings(tol, max_iter):
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = int(max_iter)
    # backend stops well inside the requested tolerance
    inner = tol * _INNER
    settings.tol_gap_abs = inner
    settings.tol_gap_rel = inner
    settings.tol_feas = inner
    settings.tol_ktratio = 1e-6
    return settings


def _clarabel_cones(cones):
    out = []
    for kind, dim in cones:
        if kind == "zero":
            out.append(clarabel.ZeroConeT(dim))
        elif kind == "nonneg":
            out.append(clarabel.NonnegativeConeT(dim))
        elif kind == "soc":
            out.append(clarabel.SecondOrderConeT(dim))
        else:
            out.append(clarabel.PSDTriangleConeT(dim))
    return out


def residuals(prog, x, s, z):
    """Relative primal, dual and gap residuals of a primal-dual triple."""
    ax = prog.A @ x
    pres = np.linalg.norm(ax + s - prog.b, np.inf) / (
        1.0 + max(np.linalg.norm(ax, np.inf), np.linalg.norm(prog.b, np.inf)))
    atz = prog.A.T @ z
    dres = np.linalg.norm(atz + prog.c, np.inf) / (
        1.0 + max(np.linalg.norm(atz, np.inf), np.linalg.norm(prog.c, np.inf)))
    pobj, dobj = prog.c @ x, -prog.b @ z
    gap = abs(pobj - dobj) / (1.0 + min(abs(pobj), abs(dobj)))
    return float(pres), float(dres), float(gap)


def solve(prog, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Solve a :class:`ConeProgram` to relative tolerance ``tol``."""
    n, m = prog.n_vars, prog.n_rows
    solver = clarabel.DefaultSolver(
        sp.csc_matrix((n, n)), prog.c, prog.A, prog.b,
        _clarabel_cones(prog.cones), _settings(tol, max_iter),
    )
    raw = solver.solve()
    x, s, z = np.asarray(raw.x), np.asarray(raw.s), np.asarray(raw.z)
    name = str(raw.status)
    status = _STATUS.get(name, MAX_ITER)
    if status == MAX_ITER and name == "AlmostSolved":
        pres, dres, gap = residuals(prog, x, s, z)
        if max(pres, dres, gap) <= tol:
            status = OPTIMAL
    if status in (OPTIMAL, MAX_ITER) and x.size == n:
        pres, dres, gap = residuals(prog, x, s, z)
        objective = float(prog.c @ x + prog.offset)
    else:
        pres = dres = gap = np.inf
        objective = np.inf if status == INFEASIBLE else -np.inf
    if status != OPTIMAL:
        logger.debug("cone solve ended with %s (%s) after %d iterations", status, name,
                     raw.iterations)
    return ConeSolution(status, x, s, z, objective, pres, dres, gap,
                        int(raw.iterations), float(raw.solve_time), raw)


def solve_problem(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Solve a cvxpy problem through :func:`solve`.

    On success the cvxpy variables hold the primal solution and
    ``problem.value`` the optimal value.
    """
    prog, chain, inverse = ConeProgram.from_problem(problem)
    sol = solve(prog, tol, max_iter)
    if sol.status in (OPTIMAL, MAX_ITER) and sol.x.size == prog.n_vars:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if sol.status == MAX_ITER:
                # cvxpy drops iterates of unsolved problems; relabel to keep the best one
                sol.raw = _Relabeled(sol.raw, "AlmostSolved")
            problem.unpack_results(sol.raw, chain, inverse)
        sol.objective = float(problem.value)
    return sol


class _Relabeled:
    def __init__(self, raw, status):
        self._raw = raw
        self.status = status

    def __getattr__(self, name):
        return getattr(self._raw, name)


def complexify(Y):
    """Hermitian matrix ``((Y11 + Y22) + j (Y21 - Y12)) / 2`` of a 2n x 2n real block matrix.

    For symmetric ``Y`` this is PSD whenever ``Y`` is, and every Hermitian
    PSD matrix arises from its own real lifting.
    """
    n = Y.shape[0] // 2
    return (Y[:n, :n] + Y[n:, n:]) / 2 + 1j * (Y[n:, :n] - Y[:n, n:]) / 2


def hermitian_psd(n, name=None):
    """Hermitian PSD matrix variable of size n backed by a real PSD cone of size 2n.

    Returns ``(Y, H)`` with ``Y`` the cvxpy variable and ``H`` the complex
    affine expression.
    """
    Y = cp.Variable((2 * n, 2 * n), PSD=True, name=name)
    return Y, complexify(Y)


def hermitian_lmi(M, embed=False):
    """Constraints equivalent to ``M >> 0`` for a Hermitian affine expression ``M``.

    By default the real and imaginary parts of the upper triangle of ``M``
    are matched against the complexification of a fresh real PSD variable,
    which keeps the equality rows linearly independent. ``embed=True``
    instead constrains ``[[Re M, -Im M], [Im M, Re M]]`` directly; the
    structural zeros of ``M`` then reach the solver, whose chordal
    decomposition splits arrow-shaped LMIs into small cones.
    """
    if embed:
        Mr, Mi = cp.real(M), cp.imag(M)
        return [cp.bmat([[Mr, -Mi], [Mi, Mr]]) >> 0]
    n = M.shape[0]
    _, H = hermitian_psd(n)
    rows, cols = np.triu_indices(n)
    strict = rows != cols
    diff = H - M
    cons = [cp.real(diff)[rows, cols] == 0]
    if strict.any():
        cons.append(cp.imag(diff)[rows[strict], cols[strict]] == 0)
    return cons


def is_psd(mat, tol=1e-8):
    """Cholesky test of ``mat + tol * scale * I``."""
    mat = np.asarray(mat)
    mat = (mat + mat.conj().T) / 2
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    try:
        np.linalg.cholesky(mat + tol * scale * np.eye(mat.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def soc_violation(head, tail):
    """``max(0, ||tail|| - head)``."""
    return max(0.0, float(np.linalg.norm(tail) - head))


def svec_to_mat(vec, n):
    """Inverse of the scaled upper-triangular vectorization."""
    mat = np.zeros((n, n))
    # column-major upper triangle: (0,0), (0,1), (1,1), (0,2), ...
    cols, rows = np.tril_indices(n)
    vals = np.asarray(vec, dtype=float).copy()
    off = rows != cols
    vals[off] /= np.sqrt(2.0)
    mat[rows, cols] = vals
    mat[cols, rows] = vals
    return mat


def check_cones(prog, s, tol=1e-7):
    """Largest cone-membership violation of the slack vector ``s``."""
    worst = 0.0
    for kind, dim, sl in prog.slices():
        block = s[sl]
        if kind == "zero":
            worst = max(worst, float(np.max(np.abs(block), initial=0.0)))
        elif kind == "nonneg":
            worst = max(worst, float(-np.min(block, initial=0.0)))
        elif kind == "soc":
            worst = max(worst, soc_violation(block[0], block[1:]))
        else:
            eig = np.linalg.eigvalsh(svec_to_mat(block, dim))
            worst = max(worst, float(-min(eig.min(), 0.0)))
    return worst


def extract_rank_one(mat, clamp=1e-6):
    """Principal-eigenvector approximation of a Hermitian PSD matrix.

    Returns ``(w, quality)`` with ``w = sqrt(lambda_1) q_1`` and ``quality``
    the eigenvalue ratio ``lambda_2 / lambda_1`` (0 for exact rank one).

    Raises
    ------
    ExtractionError
        If an eigenvalue is below ``-clamp * lambda_1``.
    """
    mat = np.asarray(mat, dtype=complex)
    mat = (mat + mat.conj().T) / 2
    n = mat.shape[0]
    if not np.any(mat):
        return np.zeros(n, dtype=complex), 0.0
    eig, vecs = np.linalg.eigh(mat)
    lam1 = eig[-1]
    if lam1 <= 0 or eig[0] < -clamp * lam1:
        raise ExtractionError(
            f"matrix is not PSD (eigenvalues in [{eig[0]:.3e}, {lam1:.3e}])"
        )
    quality = float(max(eig[-2], 0.0) / lam1) if n > 1 else 0.0
    if quality > RANK_ONE_WARN:
        logger.debug("rank-one extraction with eigenvalue ratio %.3g", quality)
    return np.sqrt(lam1) * vecs[:, -1], quality
