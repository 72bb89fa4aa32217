"""scikit-learn style wrappers around the radar design and the beamforming solvers.

``fit`` takes a :class:`~irs_isac.channel.ChannelSet` as ``X`` and the desired
covariance as ``y``; ``predict`` maps angles (degrees) to transmit power and
``transform`` maps channels to per-user SINR (dB).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from . import ao, conic, metrics, robust, sdr
from .channel import ArrayGeometry, ChannelSet, dbm_to_watts, linear_to_db
from .radar import AngularGrid, DesiredCovariance, design_desired_covariance

BEAMFORMING_METHODS = ("proposed", "sdr", "no_irs")


def check_angles(X):
    """1-D float array of angles in degrees inside [-90, 90]."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"angles must be a vector or a single column, got shape {X.shape}")
        X = X[:, 0]
    if np.any(np.abs(X) > 90):
        raise ValueError("angles must lie in [-90, 90] degrees")
    return X


def check_channels(X, n_antennas=None):
    if not isinstance(X, ChannelSet):
        raise TypeError(f"expected a ChannelSet, got {type(X).__name__}")
    if n_antennas is not None and X.n_antennas != n_antennas:
        raise ValueError(f"channels have {X.n_antennas} BS antennas, expected {n_antennas}")
    return X


def check_covariance(y, n_antennas):
    """Hermitian PSD ``n x n`` array from a matrix or a :class:`DesiredCovariance`."""
    R = getattr(y, "R", y)
    if R is None:
        raise ValueError("a desired covariance is required")
    R = np.asarray(R)
    # check_array refuses complex input, so validate the two parts
    R = (check_array(np.real(R), dtype=float)
         + 1j * check_array(np.imag(R), dtype=float))
    if R.shape != (n_antennas, n_antennas):
        raise ValueError(f"covariance must be {n_antennas} x {n_antennas}, got {R.shape}")
    if not conic.is_psd(R) or np.max(np.abs(R - R.conj().T)) > 1e-9 * max(1.0, np.abs(R).max()):
        raise ValueError("covariance must be Hermitian positive semidefinite")
    return R


def _pattern(C, angles, spacing):
    geom = ArrayGeometry(C.shape[0], spacing)
    return metrics.beampattern(C, angles, geom)


class RadarCovarianceDesigner(BaseEstimator):
    """Radar-only covariance: maximize the mainlobe-to-sidelobe margin under ``p0``.

    ``fit`` ignores ``X`` and ``y``; the design depends on the parameters only.
    """

    def __init__(self, n_antennas=8, p0_dbm=20.0, center=0.0, halfwidth=10.0, resolution=1.0,
                 guard=None, spacing=0.5, tol=conic.DEFAULT_TOL):
        self.n_antennas = n_antennas
        self.p0_dbm = p0_dbm
        self.center = center
        self.halfwidth = halfwidth
        self.resolution = resolution
        self.guard = guard
        self.spacing = spacing
        self.tol = tol

    def fit(self, X=None, y=None):
        self.grid_ = AngularGrid.uniform(self.center, self.halfwidth, self.resolution, self.guard)
        geom = ArrayGeometry(self.n_antennas, self.spacing)
        self.desired_ = design_desired_covariance(self.grid_, float(dbm_to_watts(self.p0_dbm)),
                                                  geom, self.tol)
        if self.desired_.status not in (conic.OPTIMAL, conic.MAX_ITER):
            raise RuntimeError(f"covariance design failed: {self.desired_.status}")
        self.covariance_ = self.desired_.R
        self.margin_ = self.desired_.t_opt
        return self

    def predict(self, X):
        """Transmit power (watts) of the designed covariance at angles ``X``."""
        check_is_fitted(self, "covariance_")
        return _pattern(self.covariance_, check_angles(X), self.spacing)

    def score(self, X=None, y=None):
        """PSLR (dB) of the design on its own grid."""
        check_is_fitted(self, "covariance_")
        return metrics.pslr(self.predict(self.grid_.angles), self.grid_)


class IsacBeamformer(BaseEstimator):
    """Joint BS precoders and IRS phases fitting a desired covariance under SINR targets.

    Parameters
    ----------
    sinr_db : float or sequence
        Target SINR per user (dB).
    method : {"proposed", "sdr", "no_irs"}
        Alternating FP-SDP / penalty-CCP solver, the bi-SDR benchmark, or
        precoders only with the reflected paths removed.
    random_state : int
        Seed of the random IRS phases used for initialization.
    """

    def __init__(self, sinr_db=15.0, p0_dbm=20.0, noise_dbm=-114.0, method="proposed",
                 spacing=0.5, rho0=0.1, tau=2.0, rho_max=1e4, j_max=50, nu1=1e-4, nu2=1e-5,
                 nu3=1e-3, max_iter=50, tol=conic.DEFAULT_TOL, random_state=0):
        self.sinr_db = sinr_db
        self.p0_dbm = p0_dbm
        self.noise_dbm = noise_dbm
        self.method = method
        self.spacing = spacing
        self.rho0 = rho0
        self.tau = tau
        self.rho_max = rho_max
        self.j_max = j_max
        self.nu1 = nu1
        self.nu2 = nu2
        self.nu3 = nu3
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    _methods = BEAMFORMING_METHODS

    def _setup(self, X, y):
        if self.method not in self._methods:
            raise ValueError(f"method must be one of {self._methods}, got {self.method!r}")
        ch = check_channels(X)
        R = check_covariance(y, ch.n_antennas)
        gamma = np.broadcast_to(np.asarray(self.sinr_db, dtype=float), (ch.n_users,))
        targets = ao.SinrTargets.from_db(gamma, float(dbm_to_watts(self.noise_dbm)))
        ccp = ao.CcpControls(self.rho0, self.tau, self.rho_max, self.j_max, self.nu1, self.nu2)
        aoc = ao.AoControls(self.nu3, self.max_iter, self.tol)
        return ch, R, targets, float(dbm_to_watts(self.p0_dbm)), ccp, aoc

    def _solve(self, ch, R, targets, p0, ccp, aoc):
        seed = int(self.random_state)
        if self.method == "sdr":
            return sdr.solve_sdr(ch.estimated(), R, targets, p0, aoc, seed)
        if self.method == "no_irs":
            return ao.solve_joint(ch.without_irs(), R, targets, p0, ccp, aoc, seed,
                                  optimize_irs=False)
        return ao.solve_joint(ch.estimated(), R, targets, p0, ccp, aoc, seed)

    def fit(self, X, y):
        """Solve for the channels ``X`` and desired covariance ``y``."""
        ch, R, targets, p0, ccp, aoc = self._setup(X, y)
        solution, trace = self._solve(ch, R, targets, p0, ccp, aoc)
        self.solution_, self.trace_ = solution, trace
        self.status_ = solution.status
        self.w_, self.v_, self.u_ = solution.w, solution.v, solution.u
        self.objective_ = solution.objective
        self.n_iter_ = trace.iterations
        self.n_antennas_ = ch.n_antennas
        self.targets_ = targets
        return self

    def _check_solved(self):
        check_is_fitted(self, "solution_")
        if self.status_ != ao.OK:
            raise RuntimeError(f"no solution available (status {self.status_!r})")

    @property
    def covariance_(self):
        self._check_solved()
        return metrics.covariance(self.w_)

    def predict(self, X):
        """Transmit power (watts) of ``sum_k w_k w_k^H`` at angles ``X``."""
        self._check_solved()
        return _pattern(self.covariance_, check_angles(X), self.spacing)

    def transform(self, X):
        """Per-user SINR (dB) of the fitted design on the channels ``X``."""
        self._check_solved()
        ch = check_channels(X, self.n_antennas_)
        if self.method == "no_irs":
            ch = ch.without_irs()
        sinr = metrics.achieved_sinr(ch, self.w_, self.v_, self.targets_.sigma2)
        return linear_to_db(sinr)

    def score(self, X=None, y=None):
        """Negative Frobenius objective ``-||sum w w^H - R||_F^2`` (higher is better)."""
        self._check_solved()
        if y is None:
            return -float(self.objective_)
        R = check_covariance(y, self.n_antennas_)
        return -ao.objective(self.w_, R)


class RobustIsacBeamformer(IsacBeamformer):
    """Worst-case design over ``||r_k - r_hat_k|| <= eps_k``.

    ``eps`` sets the radii (channel units); ``None`` takes them from the
    channel set.
    """

    method = "robust"
    _methods = ("robust",)

    def __init__(self, sinr_db=15.0, p0_dbm=20.0, noise_dbm=-114.0, eps=None, spacing=0.5,
                 rho0=0.1, tau=2.0, rho_max=1e4, j_max=50, nu1=1e-4, nu2=1e-5, nu3=1e-3,
                 max_iter=50, tol=conic.DEFAULT_TOL, random_state=0):
        self.sinr_db = sinr_db
        self.p0_dbm = p0_dbm
        self.noise_dbm = noise_dbm
        self.eps = eps
        self.spacing = spacing
        self.rho0 = rho0
        self.tau = tau
        self.rho_max = rho_max
        self.j_max = j_max
        self.nu1 = nu1
        self.nu2 = nu2
        self.nu3 = nu3
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _solve(self, ch, R, targets, p0, ccp, aoc):
        return robust.solve_robust(ch, R, targets, p0, self.eps, ccp, aoc, int(self.random_state))

    def worst_case_sinr(self, X, n_samples=1000, seed=0):
        """Sampled worst-case SINR (dB) over the uncertainty balls of ``X``."""
        self._check_solved()
        ch = check_channels(X, self.n_antennas_)
        if self.eps is not None:
            ch = ch.with_eps(np.broadcast_to(np.asarray(self.eps, float), (ch.n_users,)))
        worst = metrics.worst_case_sinr_sampled(ch, self.w_, self.v_, self.targets_.sigma2,
                                                n_samples, seed)
        return linear_to_db(worst)


__all__ = ["IsacBeamformer", "RadarCovarianceDesigner", "RobustIsacBeamformer", "check_angles",
           "check_channels", "check_covariance", "DesiredCovariance"]
