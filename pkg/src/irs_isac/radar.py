"""Desired MIMO-radar transmit covariance with a 3 dB mainlobe.

The covariance maximizes the gap between the mainlobe peak and the highest
sidelobe, keeps the half-power points at the mainlobe edges, forbids notches
inside the mainlobe and gives every antenna the same average power.
"""
from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import conic
from .channel import ArrayGeometry, steering_matrix


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Angular grid in degrees with mainlobe and sidelobe bookkeeping.

    The mainlobe spans ``[center - halfwidth, center + halfwidth]``; the
    sidelobe region is every grid angle at least ``halfwidth + guard`` away
    from the center.
    """

    angles: np.ndarray
    mainlobe_center: float
    halfwidth: float
    guard: float

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.ndim != 1 or angles.size < 2 or np.any(np.diff(angles) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if angles[0] < -90 or angles[-1] > 90:
            raise ValueError("grid must lie inside [-90, 90] degrees")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        if self.halfwidth < 0 or self.guard < 0:
            raise ValueError("halfwidth and guard must be nonnegative")
        for phi in (self.mainlobe_center, self.phi1, self.phi2):
            if not np.any(np.isclose(angles, phi, atol=1e-9)):
                raise ValueError(f"angle {phi} deg must lie on the grid")

    @classmethod
    def uniform(cls, center=0.0, halfwidth=10.0, resolution=1.0, guard=None):
        """Grid over [-90, 90] with spacing ``resolution``; ``guard`` defaults to ``halfwidth``."""
        n = int(round(180.0 / resolution))
        angles = np.linspace(-90.0, 90.0, n + 1)
        return cls(angles, float(center), float(halfwidth),
                   float(halfwidth if guard is None else guard))

    @property
    def phi1(self):
        return self.mainlobe_center - self.halfwidth

    @property
    def phi2(self):
        return self.mainlobe_center + self.halfwidth

    def index(self, phi):
        return int(np.argmin(np.abs(self.angles - phi)))

    @property
    def center_index(self):
        return self.index(self.mainlobe_center)

    @property
    def mainlobe(self):
        return np.arange(self.index(self.phi1), self.index(self.phi2) + 1)

    @property
    def sidelobe(self):
        off = np.abs(self.angles - self.mainlobe_center)
        return np.flatnonzero(off >= self.halfwidth + self.guard - 1e-9)


@dataclass(frozen=True, eq=False)
class DesiredCovariance:
    R: np.ndarray
    grid: AngularGrid
    p0: float
    t_opt: float
    status: str = conic.OPTIMAL


@dataclass
class DesiredReport:
    """Per-constraint residuals, relative to the power budget.

    Keys of ``residuals``: ``sidelobe`` (margin constraint), ``half_power``,
    ``rise`` and ``fall`` (no notches in the mainlobe), ``psd``,
    ``hermitian`` and ``per_antenna``.
    """

    residuals: dict
    margin: float
    flags: list

    @property
    def ok(self):
        return not self.flags


def pattern_expression(R, steer):
    """cvxpy expression of the beampattern ``a^H R a`` for each steering column."""
    return cp.real(cp.sum(cp.multiply(np.conj(steer), R @ steer), axis=0))


def _monotone_pairs(grid):
    i0, i1, i2 = grid.center_index, grid.index(grid.phi1), grid.index(grid.phi2)
    rise = [(m, m + 1) for m in range(i1, i0)]
    fall = [(m, m + 1) for m in range(i0, i2)]
    return rise, fall


def design_desired_covariance(grid, p0, geom, tol=conic.DEFAULT_TOL):
    """Maximize the mainlobe-to-sidelobe margin under per-antenna power ``p0 / N``.

    Returns
    -------
    DesiredCovariance
        ``status`` carries the solver verdict; ``R`` is NaN-filled when the
        program has no solution.
    """
    if not p0 > 0:
        raise ValueError(f"power budget must be positive, got {p0}")
    n = geom.n_antennas
    if n == 1:
        return DesiredCovariance(np.array([[p0]], dtype=complex), grid, float(p0), 0.0)
    steer = steering_matrix(grid.angles, geom)
    _, R = conic.hermitian_psd(n)
    t = cp.Variable()
    pat = pattern_expression(R, steer)
    i0 = grid.center_index
    rise, fall = _monotone_pairs(grid)
    # unit budget; rescaled on return
    cons = [
        pat[i0] - pat[grid.sidelobe] >= t,
        pat[grid.index(grid.phi1)] >= pat[i0] / 2,
        pat[grid.index(grid.phi2)] >= pat[i0] / 2,
        cp.real(cp.diag(R)) == np.full(n, 1.0 / n),
    ]
    if rise:
        lo, hi = map(list, zip(*rise))
        cons.append(pat[hi] >= pat[lo])
    if fall:
        lo, hi = map(list, zip(*fall))
        cons.append(pat[lo] >= pat[hi])
    prob = cp.Problem(cp.Minimize(-t), cons)
    sol = conic.solve_problem(prob, tol=tol)
    if sol.status not in (conic.OPTIMAL, conic.MAX_ITER) or R.value is None:
        return DesiredCovariance(np.full((n, n), np.nan, dtype=complex), grid, float(p0),
                                 np.nan, sol.status)
    Rv = np.asarray(R.value)
    Rv = (Rv + Rv.conj().T) / 2 * p0
    return DesiredCovariance(Rv, grid, float(p0), float(t.value) * p0, sol.status)


def evaluate_pattern(R, grid, geom):
    steer = steering_matrix(grid.angles, geom)
    return np.real(np.einsum("im,ij,jm->m", steer.conj(), R, steer))


def validate_desired(desired, geom=None, tol=1e-6):
    """Check a desired covariance against every design constraint.

    Residuals are violations (0 when satisfied) divided by ``p0``. A zero or
    negative margin is flagged as ``"margin"``.
    """
    R = np.asarray(desired.R)
    grid = desired.grid
    p0 = desired.p0
    geom = geom or ArrayGeometry(R.shape[0])
    n = R.shape[0]
    pat = evaluate_pattern(R, grid, geom)
    i0 = grid.center_index
    p_center = pat[i0]
    side = pat[grid.sidelobe]
    margin = float(p_center - side.max()) if side.size else np.inf
    t = desired.t_opt if np.isfinite(desired.t_opt) else margin
    rise, fall = _monotone_pairs(grid)

    def worst(values):
        values = np.asarray(values, dtype=float)
        return float(max(0.0, values.max(initial=0.0))) / p0

    res = {
        "sidelobe": worst(side - p_center + t) if side.size else 0.0,
        "half_power": worst([p_center / 2 - pat[grid.index(grid.phi1)],
                             p_center / 2 - pat[grid.index(grid.phi2)]]),
        "rise": worst([pat[a] - pat[b] for a, b in rise]),
        "fall": worst([pat[b] - pat[a] for a, b in fall]),
        "psd": worst([-np.linalg.eigvalsh((R + R.conj().T) / 2).min()]),
        "hermitian": float(np.max(np.abs(R - R.conj().T))) / p0,
        "per_antenna": float(np.max(np.abs(np.real(np.diag(R)) - p0 / n))) / (p0 / n),
    }
    flags = [name for name, value in res.items() if value > tol]
    if not margin > tol * p0:
        flags.append("margin")
    return DesiredReport(res, margin, flags)
