"""Joint precoder / IRS phase design under perfect channel knowledge.

The SINR constraints are handled with the fractional-programming quadratic
transform: for a fixed multiplier ``u_k`` the concave surrogate
``2 Re{u_k^* a_k^T w_k} - |u_k|^2 beta_k`` lower-bounds the SINR and is tight
at ``u_k = a_k^T w_k / beta_k``. The alternation is

1. precoders: lifted SDP with the FP surrogate constraints, rank-one
   extraction and a common power rescaling;
2. IRS phases: penalty convex-concave procedure over second-order cone
   programs that maximize the SINR residuals subject to unit modulus;
3. multipliers: closed-form update.

Every solver call runs in normalized units (noise power 1, power budget 1).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import conic
from .channel import random_phases
from .metrics import covariance, effective_channels, sinr_from_channels

logger = logging.getLogger(__name__)

OK = "ok"
INFEASIBLE = "infeasible"
DEGRADED = "degraded"

SINR_SLACK = 1e-3
CCP_PRIMAL_RESIDUAL = 1e-4


@dataclass(frozen=True)
class SinrTargets:
    """Linear SINR thresholds and noise power (watts)."""

    gamma: tuple
    sigma2: float

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        object.__setattr__(self, "gamma", gamma)
        if min(gamma) <= 0 or not self.sigma2 > 0:
            raise ValueError("SINR targets and noise power must be positive")

    @classmethod
    def from_db(cls, gamma_db, sigma2, n_users=None):
        g = np.atleast_1d(np.asarray(gamma_db, dtype=float))
        if n_users is not None and g.size == 1:
            g = np.repeat(g, n_users)
        return cls(tuple(10.0 ** (g / 10.0)), sigma2)

    @property
    def array(self):
        return np.asarray(self.gamma)


@dataclass(frozen=True)
class CcpControls:
    rho0: float = 0.1
    tau: float = 2.0
    rho_max: float = 1e4
    j_max: int = 50
    nu1: float = 1e-4
    nu2: float = 1e-5

    def __post_init__(self):
        if self.tau < 1 or not self.rho_max >= self.rho0 > 0:
            raise ValueError("need tau >= 1 and rho_max >= rho0 > 0")


@dataclass(frozen=True)
class AoControls:
    nu3: float = 1e-3
    max_iter: int = 50
    tol: float = conic.DEFAULT_TOL


@dataclass
class ConvergenceTrace:
    """Objective ``||sum w w^H - R||_F^2`` of every accepted iterate, with diagnostics.

    ``xi[0]`` belongs to the first SINR-feasible iterate (the starting point
    when it is feasible). ``steps`` has one record per AO iteration,
    accepted or not.
    """

    xi: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    stop_reason: str = ""
    start_xi: float = np.nan
    start_feasible: bool = True

    @property
    def iterations(self):
        return len(self.steps)


@dataclass
class BeamformingSolution:
    w: np.ndarray
    v: np.ndarray
    u: np.ndarray
    status: str
    objective: float
    rank_quality: list = field(default_factory=list)
    power_residual: float = 0.0


@dataclass
class WStep:
    W_hat: list
    w: np.ndarray
    status: str
    quality: list
    power_residual: float
    objective: float = np.nan
    extraction: str = "eigen"


@dataclass(frozen=True)
class VCoefficients:
    """Quadratic form ``2 Re{mu^H v*} + v^T M v* <= c0 - t`` of one user."""

    mu: np.ndarray
    M: np.ndarray
    c0: float

    def c(self, t=0.0):
        return self.c0 - t


@dataclass
class CcpTrace:
    rho: list = field(default_factory=list)
    xi_l1: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    t: np.ndarray = None
    status: str = OK

    @property
    def iterations(self):
        return len(self.rho)


class Normalizer:
    """Maps physical quantities to units with unit noise power and unit budget."""

    def __init__(self, p0, sigma2):
        self.p0 = float(p0)
        self.sigma2 = float(sigma2)
        self.ch_scale = np.sqrt(self.p0 / self.sigma2)

    def channels(self, ch):
        return ch.scaled(self.ch_scale)

    def w_in(self, w):
        return np.asarray(w) / np.sqrt(self.p0)

    def w_out(self, w):
        return np.asarray(w) * np.sqrt(self.p0)

    def u_in(self, u):
        return np.asarray(u) * np.sqrt(self.sigma2)

    def u_out(self, u):
        return np.asarray(u) / np.sqrt(self.sigma2)

    def cov_in(self, R):
        return np.asarray(R) / self.p0


def _as_rows(w):
    return np.atleast_2d(np.asarray(w, dtype=complex))


def effective_channel(ch, v):
    """Rows ``a_k^T = h_k^T + v^T diag(r_k) G`` (K x N)."""
    return effective_channels(ch.h, ch.g_mat, ch.r, v)


def interference_power(a, w):
    gains = np.abs(a @ _as_rows(w).T) ** 2
    return gains.sum(axis=1) - np.diag(gains)


def update_u(ch, v, w, sigma2):
    """Multipliers that make the FP surrogate tight at the current point."""
    a = effective_channel(ch, v)
    w = _as_rows(w)
    signal = np.einsum("kn,kn->k", a, w)
    return signal / (interference_power(a, w) + sigma2)


def fp_surrogate(ch, v, w, u, sigma2):
    """``2 Re{u_k^* a_k^T w_k} - |u_k|^2 beta_k`` for every user."""
    a = effective_channel(ch, v)
    w = _as_rows(w)
    u = np.asarray(u)
    signal = np.einsum("kn,kn->k", a, w)
    beta = interference_power(a, w) + sigma2
    return 2.0 * np.real(np.conj(u) * signal) - np.abs(u) ** 2 * beta


def quadratic_transform(U, A, B):
    """Matrix form ``2 Re Tr{U^H A} - Tr{U^H B U}``, a lower bound on ``Tr{A^H B^-1 A}``."""
    U, A, B = (np.atleast_2d(np.asarray(x)) for x in (U, A, B))
    return float(2.0 * np.real(np.vdot(U, A)) - np.real(np.vdot(U, B @ U)))


def quadratic_transform_argmax(A, B):
    """``B^-1 A``; the bound is tight there."""
    return np.linalg.solve(np.atleast_2d(B), np.atleast_2d(A))


def objective(w, R):
    """Frobenius distance squared between ``sum_k w_k w_k^H`` and ``R``."""
    return float(np.linalg.norm(covariance(_as_rows(w)) - R, "fro") ** 2)


def power_repair(w, p0):
    """Rescale all precoders by one positive factor to total power ``p0``."""
    w = _as_rows(w)
    total = float(np.sum(np.abs(w) ** 2))
    if total <= 0:
        return w
    return w * np.sqrt(p0 / total)


def per_antenna_residual(w, p0):
    w = _as_rows(w)
    n = w.shape[1]
    diag = np.real(np.diag(covariance(w)))
    return float(np.max(np.abs(diag - p0 / n)) / (p0 / n))


def _extract_precoders(W_hat, n):
    """Principal-eigenvector precoders ``w~(1:N) / w~(N+1)`` of lifted blocks."""
    out, quality = [], []
    for Wk in W_hat:
        wt, q = conic.extract_rank_one(Wk)
        if abs(wt[n]) < 1e-8:
            raise conic.ExtractionError("lifted precoder has a vanishing last entry")
        out.append(wt[:n] / wt[n])
        quality.append(q)
    return np.array(out), quality


def solve_lifted(n_users, n, R, sinr_constraints, tol):
    """Lifted precoder SDP in normalized units.

    ``sinr_constraints(Wbar, wbar)`` yields the per-user constraints on the
    N x N blocks and last columns of the (N+1) x (N+1) lifted variables.
    Returns ``(status, W_hat list or None, objective)``.
    """
    blocks = [conic.hermitian_psd(n + 1)[1] for _ in range(n_users)]
    Wbar = [B[:n, :n] for B in blocks]
    wbar = [B[:n, n] for B in blocks]
    cov = sum(Wbar)
    cons = [cp.real(cp.diag(cov)) == np.full(n, 1.0 / n)]
    cons += [cp.real(B[n, n]) == 1 for B in blocks]
    cons += list(sinr_constraints(Wbar, wbar))
    prob = cp.Problem(cp.Minimize(cp.norm(cov - R, "fro")), cons)
    sol = conic.solve_problem(prob, tol=tol)
    if not _usable(sol):
        return sol.status, None, np.nan
    W_hat = [np.asarray(B.value) for B in blocks]
    return conic.OPTIMAL, W_hat, float(prob.value) ** 2


def fp_constraints(a, u, gamma):
    """Surrogate SINR constraints of the lifted precoder step."""
    k = a.shape[0]

    def build(Wbar, wbar):
        for i in range(k):
            ak = a[i]
            # a^T W a^* for the interferers; the i == k term cancels against B_k
            interf = sum(cp.real(ak @ Wbar[j] @ ak.conj()) for j in range(k) if j != i)
            useful = 2 * cp.real(np.conj(u[i]) * (ak @ wbar[i]))
            yield useful - abs(u[i]) ** 2 * (1.0 + interf) >= gamma[i]

    return build


def _usable(sol, primal=1e-5):
    if sol.status == conic.OPTIMAL:
        return True
    return sol.status == conic.MAX_ITER and sol.primal_residual <= primal and sol.gap <= 1e-4


def finish_lifted(status, W_hat, obj, norm, R, p0, feasible):
    """Extraction, power repair and bookkeeping shared by the lifted precoder steps.

    The principal-eigenvector precoders are kept when ``feasible(w)`` holds
    and they fit ``R`` at least as well as the lifted last columns, which
    satisfy the SINR constraints by construction.
    """
    if W_hat is None:
        return WStep(None, None, INFEASIBLE if status == conic.INFEASIBLE else status, [], np.nan)
    n = W_hat[0].shape[0] - 1
    w, quality = _extract_precoders(W_hat, n)
    w = power_repair(norm.w_out(w), p0)
    extraction = "eigen"
    w_col = power_repair(norm.w_out(np.array([Wk[:n, n] for Wk in W_hat])), p0)
    if not feasible(w) or objective(w_col, R) < objective(w, R):
        w, extraction = w_col, "column"
    scale = np.ones(n + 1)
    scale[:n] = np.sqrt(p0)
    W_phys = [Wk * np.outer(scale, scale) for Wk in W_hat]
    return WStep(W_phys, w, OK, quality, per_antenna_residual(w, p0), obj * p0 ** 2, extraction)


def update_w(ch, v, u, R, targets, p0, tol=conic.DEFAULT_TOL):
    """Precoder step: lifted FP-constrained SDP, extraction and power repair.

    Parameters
    ----------
    ch : ChannelSet
        Channels used by the optimizer (``r`` is taken as known).
    v : ndarray
        IRS coefficients held fixed.
    u : ndarray
        FP multipliers (physical units).
    R : DesiredCovariance or ndarray
    targets : SinrTargets
    p0 : float

    Returns
    -------
    WStep
        ``W_hat`` are the lifted (N+1) x (N+1) blocks in physical units and
        ``w`` the extracted, power-repaired precoders (K x N).
    """
    R = getattr(R, "R", R)
    norm = Normalizer(p0, targets.sigma2)
    a = effective_channel(norm.channels(ch), v)
    status, W_hat, obj = solve_lifted(ch.n_users, ch.n_antennas, norm.cov_in(R),
                                      fp_constraints(a, norm.u_in(u), targets.array), tol)
    return finish_lifted(status, W_hat, obj, norm, R, p0,
                         lambda w: _feasible(ch, w, v, targets, 0.0))


def v_step_coefficients(ch, w, u, targets):
    """Per-user ``(mu_k, M_k, c_k)`` of the IRS-step quadratic constraints.

    Inputs and outputs are in whatever consistent units the caller uses; the
    noise power is ``targets.sigma2``.
    """
    w = _as_rows(w)
    u = np.asarray(u)
    k = ch.n_users
    out = []
    for i in range(k):
        others = [j for j in range(k) if j != i]
        sigma_k = covariance(w[others]) if others else np.zeros((ch.n_antennas,) * 2, complex)
        rg = ch.r[i][:, None] * ch.g_mat  # diag(r_k) G
        uk2 = abs(u[i]) ** 2
        mu = uk2 * rg @ sigma_k @ ch.h[i].conj() - np.conj(u[i]) * rg @ w[i]
        M = uk2 * rg @ sigma_k @ rg.conj().T
        M = (M + M.conj().T) / 2
        c0 = (2.0 * np.real(np.conj(u[i]) * (ch.h[i] @ w[i])) - targets.gamma[i]
              - uk2 * (targets.sigma2 + np.real(ch.h[i] @ sigma_k @ ch.h[i].conj())))
        out.append(VCoefficients(mu, M, float(c0)))
    return out


def quadratic_lhs(coeff, v):
    """``2 Re{mu^H v*} + v^T M v*``."""
    vc = np.conj(v)
    return float(2.0 * np.real(np.vdot(coeff.mu, vc)) + np.real(v @ coeff.M @ vc))


def psd_factor(M, rel=1e-10):
    """``F`` with ``F^H F = M``; eigenvalues below ``rel * lambda_max`` are dropped."""
    eig, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    lam_max = eig[-1] if eig.size else 0.0
    if lam_max <= 0:
        return np.zeros((0, M.shape[0]), dtype=complex)
    keep = eig > rel * lam_max
    return np.sqrt(eig[keep])[:, None] * vecs[:, keep].conj().T


def _real_map(F):
    """Real matrix taking ``[Re v; Im v]`` to ``[Re(F v*); Im(F v*)]``."""
    return np.block([[F.real, F.imag], [F.imag, -F.real]])


class PenaltyCcp:
    """Penalty-CCP subproblem skeleton: modulus constraints, objective and re-solves.

    Subclasses add the per-user SINR constraints in ``user_constraints`` and
    refresh their parameters in ``recentre``. The IRS vector is the real
    variable ``x = [Re v; Im v]``.
    """

    def __init__(self, n_elements, n_users):
        l = n_elements
        self.n_elements = l
        self.x = cp.Variable(2 * l)
        self.t = cp.Variable(n_users, nonneg=True)
        self.xi = cp.Variable(2 * l, nonneg=True)
        self.anchor = cp.Parameter(2 * l)
        self.anchor_sq = cp.Parameter(l, nonneg=True)
        self.rho = cp.Parameter(nonneg=True)
        vr, vi = self.x[:l], self.x[l:]
        cons = list(self.user_constraints())
        ar, ai = self.anchor[:l], self.anchor[l:]
        # linearized |v_l|^2 >= 1 and |v_l|^2 <= 1 + xi as a second-order cone
        cons.append(self.anchor_sq - 2.0 * (cp.multiply(ar, vr) + cp.multiply(ai, vi))
                    <= self.xi[:l] - 1.0)
        cons.append(cp.SOC(2.0 + self.xi[l:], cp.vstack([2.0 * vr, 2.0 * vi, self.xi[l:]]),
                           axis=0))
        self.problem = cp.Problem(cp.Maximize(cp.sum(self.t) - self.rho * cp.sum(self.xi)), cons)

    @property
    def v_expr(self):
        l = self.n_elements
        return self.x[:l] + 1j * self.x[l:]

    def user_constraints(self):
        return []

    def recentre(self, anchor):
        pass

    def solve(self, anchor, rho, tol):
        self.anchor.value = np.concatenate([anchor.real, anchor.imag])
        self.anchor_sq.value = np.abs(anchor) ** 2
        self.rho.value = rho
        self.recentre(anchor)
        sol = conic.solve_problem(self.problem, tol=tol)
        # looser than the precoder steps: the caller re-checks SINR on the snapped phases
        if not _usable(sol, primal=CCP_PRIMAL_RESIDUAL) or self.x.value is None:
            return None
        l = anchor.size
        x = self.x.value
        return x[:l] + 1j * x[l:], np.asarray(self.t.value), np.asarray(self.xi.value)


def residual_scale(coeff):
    """Per-user weight that makes the SINR residual ``t_k`` dimensionless."""
    return 1.0 / max(1.0, float(np.max(np.abs(coeff.M), initial=0.0)),
                     float(np.max(np.abs(coeff.mu), initial=0.0)))


class NominalUserConstraint:
    """One user's SINR constraint of the nominal IRS step, re-centred at every anchor.

    The quadratic constraint is written in the step ``d = v - v_anchor``
    with the anchor slack evaluated in floating point beforehand; expanding
    around zero instead cancels catastrophically when the multipliers are
    large.
    """

    def __init__(self, coeff, n_elements):
        self.coeff = coeff
        self.scale = residual_scale(coeff)
        self.grad = cp.Parameter(2 * n_elements)
        self.slack0 = cp.Parameter()

    def constraint(self, x, anchor, t):
        # 2 Re{g^H d*} = 2 (Re g . Re d - Im g . Im d), grad holds [Re g; -Im g];
        # slack0 holds the anchor slack plus 2 grad . anchor (keeps the program DPP)
        slack = self.scale * (self.slack0 - 2.0 * (self.grad @ x)) - t
        F = psd_factor(self.coeff.M * self.scale)
        if not F.shape[0]:
            return slack >= 0
        tail = cp.hstack([2.0 * (_real_map(F) @ (x - anchor)), 1.0 - slack])
        return cp.SOC(1.0 + slack, tail)

    def recentre(self, anchor):
        cf = self.coeff
        g = cf.mu + cf.M @ np.conj(anchor)
        grad = np.concatenate([g.real, -g.imag])
        self.grad.value = grad
        self.slack0.value = (cf.c0 - quadratic_lhs(cf, anchor)
                             + 2.0 * grad @ np.concatenate([anchor.real, anchor.imag]))


class _CcpProblem(PenaltyCcp):
    """Nominal IRS step."""

    def __init__(self, coeffs, n_elements):
        self.users = [NominalUserConstraint(cf, n_elements) for cf in coeffs]
        super().__init__(n_elements, len(coeffs))

    def user_constraints(self):
        for i, user in enumerate(self.users):
            yield user.constraint(self.x, self.anchor, self.t[i])

    def recentre(self, anchor):
        for user in self.users:
            user.recentre(anchor)


def run_ccp(problem, v_prev, controls, tol=conic.DEFAULT_TOL):
    """Algorithm loop shared by the nominal and robust IRS steps."""
    trace = CcpTrace()
    rho = controls.rho0
    anchor = np.asarray(v_prev, dtype=complex)
    v, t, xi = anchor, None, None
    for _ in range(controls.j_max):
        out = problem.solve(anchor, rho, tol)
        if out is None:
            trace.status = INFEASIBLE
            break
        v, t, xi = out
        move = float(np.sum(np.abs(v - anchor)))
        trace.rho.append(rho)
        trace.xi_l1.append(float(np.sum(xi)))
        trace.moves.append(move)
        rho = min(controls.tau * rho, controls.rho_max)
        anchor = v
        if move <= controls.nu1 and trace.xi_l1[-1] <= controls.nu2:
            break
    ok = trace.status == OK and trace.xi_l1 and trace.xi_l1[-1] <= controls.nu2
    if not ok:
        if trace.status == OK:
            trace.status = DEGRADED
        return np.asarray(v_prev, dtype=complex), trace
    trace.t = t
    # unit modulus up to the penalty residual; snap the phases
    return v / np.abs(v), trace


def update_v(coeffs, v_prev, controls=CcpControls(), tol=conic.DEFAULT_TOL):
    """IRS step by penalty CCP.

    Returns ``(v, trace)``; on a degraded or infeasible run ``v`` is
    ``v_prev`` and ``trace.status`` says why.
    """
    problem = _CcpProblem(coeffs, len(v_prev))
    return run_ccp(problem, v_prev, controls, tol)


def sdr_w_step(ch, v, R, targets, p0, tol=conic.DEFAULT_TOL):
    """Exact-SINR relaxed precoder SDP; used for initialization."""
    from .sdr import update_w_sdr

    return update_w_sdr(ch, v, R, targets, p0, tol)


def _feasible(ch, w, v, targets, slack=SINR_SLACK):
    sinr = sinr_from_channels(effective_channel(ch, v), w, targets.sigma2)
    return bool(np.all(sinr >= targets.array * (1.0 - slack)))


def alternate(ch, R, targets, p0, w_step, v_step, u_step, ao_controls, v0, w0, u0,
              sinr_slack=SINR_SLACK, feasible_fn=None):
    """Generic AO driver with the relative-decrease stopping rule.

    ``w_step(v, u)`` returns a :class:`WStep`; ``v_step(w, u, v)`` returns
    ``(v, status)``; ``u_step(w, v, u)`` returns the new multipliers.

    A new IRS vector that breaks the SINR targets of the new precoders
    (beyond ``sinr_slack``) is discarded in favour of the old one. While the
    current point misses the SINR targets, the first feasible iterate is
    accepted unconditionally and the objective trace starts there. Afterwards
    an iterate that is infeasible, or whose objective rises by more than
    ``1e-5 * xi[0]``, is rejected and the run ends with the previous iterate.
    ``feasible_fn(w, v)`` replaces the nominal SINR check when given.
    """
    Rm = getattr(R, "R", R)
    if feasible_fn is None:
        def feasible_fn(w, v):
            return _feasible(ch, w, v, targets, sinr_slack)
    trace = ConvergenceTrace()
    v, w, u = v0, w0, u0
    xi_prev = objective(w, Rm)
    feasible = feasible_fn(w, v)
    trace.start_xi = xi_prev
    trace.start_feasible = feasible
    if feasible:
        trace.xi.append(xi_prev)
    quality = []
    for n in range(ao_controls.max_iter):
        record = {"iteration": n + 1}
        t0 = time.perf_counter()
        ws = w_step(v, u)
        record["w_time"] = time.perf_counter() - t0
        record["w_status"] = ws.status
        if ws.status != OK:
            # refresh the multipliers once at the current point
            u_retry = update_u(ch, v, w, targets.sigma2)
            ws = w_step(v, u_retry)
            record["w_retry"] = True
            record["w_status"] = ws.status
            if ws.status != OK:
                trace.steps.append(record)
                trace.stop_reason = "w_step_infeasible"
                break
            u = u_retry
        t0 = time.perf_counter()
        v_new, v_status = v_step(ws.w, u, v)
        record["v_time"] = time.perf_counter() - t0
        record["v_status"] = v_status
        if not feasible_fn(ws.w, v_new):
            record["v_kept"] = True
            v_new = v
        xi_new = objective(ws.w, Rm)
        record["xi"] = xi_new
        record["rank_quality"] = ws.quality
        record["power_residual"] = ws.power_residual
        record["extraction"] = ws.extraction
        feasible_new = feasible_fn(ws.w, v_new)
        if feasible:
            slack = 1e-5 * max(trace.xi[0], 1e-12)
            accepted = feasible_new and xi_new <= xi_prev + slack
        else:
            accepted = feasible_new
        record["accepted"] = accepted
        trace.steps.append(record)
        if not accepted:
            if feasible:
                trace.stop_reason = "rejected_step"
                break
            # still searching for a feasible point; keep the precoders' direction
            w, v, u = ws.w, v_new, u_step(ws.w, v_new, u)
            xi_prev = xi_new
            continue
        w, v, u = ws.w, v_new, u_step(ws.w, v_new, u)
        quality = ws.quality
        trace.xi.append(xi_new)
        if not feasible:
            feasible = True
            xi_prev = xi_new
            continue
        decrease = xi_prev - xi_new
        xi_prev = xi_new
        if decrease <= ao_controls.nu3 * max(trace.xi[-2], 1e-12):
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max_iter"
    status = OK if feasible else INFEASIBLE
    return _solution(w, v, u, status, xi_prev, quality, p0), trace


def _solution(w, v, u, status, xi, quality, p0):
    return BeamformingSolution(np.asarray(w), np.asarray(v), np.asarray(u), status, float(xi),
                               list(quality), per_antenna_residual(w, p0))


def initial_point(ch, R, targets, p0, seed, tol=conic.DEFAULT_TOL):
    """Random IRS phases, exact-SINR SDR precoders and matching multipliers.

    Returns ``None`` when the initial precoder SDP is infeasible.
    """
    v0 = random_phases(ch.n_elements, seed)
    ws = sdr_w_step(ch, v0, R, targets, p0, tol)
    if ws.status != OK:
        return None
    return v0, ws.w, update_u(ch, v0, ws.w, targets.sigma2)


def solve_joint(ch, R, targets, p0, controls=CcpControls(), ao_controls=AoControls(), seed=0,
                optimize_irs=True):
    """Alternate precoder SDP, IRS penalty CCP and multiplier update to convergence.

    With ``optimize_irs=False`` the IRS step is skipped (used with zeroed
    reflected channels for the no-IRS baseline).

    Returns
    -------
    (BeamformingSolution, ConvergenceTrace)
        ``status`` is ``"infeasible"`` when no feasible starting point exists.
    """
    start = initial_point(ch, R, targets, p0, seed, ao_controls.tol)
    if start is None:
        n, l, k = ch.n_antennas, ch.n_elements, ch.n_users
        sol = BeamformingSolution(np.full((k, n), np.nan + 0j), np.full(l, np.nan + 0j),
                                  np.full(k, np.nan + 0j), INFEASIBLE, np.nan)
        return sol, ConvergenceTrace(stop_reason="initialization_infeasible")
    v0, w0, u0 = start
    norm = Normalizer(p0, targets.sigma2)
    nch = norm.channels(ch)
    ntargets = SinrTargets(targets.gamma, 1.0)

    def w_step(v, u):
        return update_w(ch, v, u, R, targets, p0, ao_controls.tol)

    def v_step(w, u, v):
        if not optimize_irs:
            return v, "skipped"
        # multipliers made tight at the new precoders, so v is a feasible CCP anchor
        u = update_u(ch, v, w, targets.sigma2)
        coeffs = v_step_coefficients(nch, norm.w_in(w), norm.u_in(u), ntargets)
        v_new, ccp = update_v(coeffs, v, controls, ao_controls.tol)
        return v_new, ccp.status

    def u_step(w, v, u):
        return update_u(ch, v, w, targets.sigma2)

    return alternate(ch, R, targets, p0, w_step, v_step, u_step, ao_controls, v0, w0, u0)
