"""Array steering, path loss and Rician channel generation.

All angles at this module's boundary are in degrees. Channel realizations are
pure functions of ``(model, seed)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Fixed sub-stream keys so adding a purpose never perturbs another stream.
_STREAM_G = 1
_STREAM_R = 2
_STREAM_H = 3
_STREAM_DELTA = 4
_STREAM_IRS_INIT = 5


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def substream(seed, purpose, *extra):
    """Independent generator for one purpose of one trial."""
    return np.random.default_rng([int(seed), int(purpose), *map(int, extra)])


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with ``n_antennas`` elements.

    ``spacing`` is the inter-element spacing in wavelengths.
    """

    n_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValueError(f"n_antennas must be a positive integer, got {self.n_antennas}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class PathLossModel:
    eta0: float = 1e-3
    d0: float = 1.0
    alpha_bu: float = 3.5
    alpha_bi: float = 2.2
    alpha_iu: float = 2.2

    def __post_init__(self):
        if not (self.eta0 > 0 and self.d0 > 0):
            raise ValueError("eta0 and d0 must be positive")
        if min(self.alpha_bu, self.alpha_bi, self.alpha_iu) <= 0:
            raise ValueError("path loss exponents must be positive")


@dataclass(frozen=True)
class ScenarioGeometry:
    """Link distances in meters; per-user tuples have one entry per user."""

    d_ib: float
    d_iu_k: tuple
    d_bu_k: tuple

    def __post_init__(self):
        object.__setattr__(self, "d_iu_k", tuple(float(d) for d in self.d_iu_k))
        object.__setattr__(self, "d_bu_k", tuple(float(d) for d in self.d_bu_k))
        if len(self.d_iu_k) != len(self.d_bu_k):
            raise ValueError("d_iu_k and d_bu_k must have one entry per user")
        if min((self.d_ib,) + self.d_iu_k + self.d_bu_k) <= 0:
            raise ValueError("all distances must be positive")

    @classmethod
    def uniform(cls, n_users, d_ib=25.0, d_iu=20.0, d_bu=50.0):
        return cls(d_ib, (d_iu,) * n_users, (d_bu,) * n_users)


def default_user_angles(n_users):
    if n_users == 1:
        return (0.0,)
    return tuple(float(a) for a in np.linspace(-45.0, 45.0, n_users))


@dataclass(frozen=True)
class RicianConfig:
    """Rician factors and the angles of the rank-one LoS components.

    ``bs_departure`` is the BS-side angle of the BS to IRS LoS path,
    ``irs_arrival`` the IRS-side angle of the same path and ``user_angles``
    the IRS-side departure angle toward each user.
    """

    k_ib: float = 2.2
    k_ui: float = 2.2
    bs_departure: float = 40.0
    irs_arrival: float = -30.0
    user_angles: tuple | None = None

    def __post_init__(self):
        if self.k_ib < 0 or self.k_ui < 0:
            raise ValueError("Rician factors must be nonnegative")
        if self.user_angles is not None:
            object.__setattr__(self, "user_angles", tuple(float(a) for a in self.user_angles))


@dataclass(frozen=True)
class ChannelModel:
    """Everything needed to draw one :class:`ChannelSet`.

    ``eps_mode`` is ``"none"``, ``"absolute"`` (``eps`` in channel units) or
    ``"relative"`` (``eps`` as a fraction of the estimated channel norm).
    """

    bs: ArrayGeometry
    n_elements: int
    n_users: int
    geometry: ScenarioGeometry
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    rician: RicianConfig = field(default_factory=RicianConfig)
    eps_mode: str = "none"
    eps: float | tuple = 0.0

    def __post_init__(self):
        if self.n_elements < 1 or self.n_users < 1:
            raise ValueError("n_elements and n_users must be positive")
        if len(self.geometry.d_iu_k) != self.n_users:
            raise ValueError("geometry must list one distance per user")
        if self.eps_mode not in ("none", "absolute", "relative"):
            raise ValueError(f"unknown eps_mode {self.eps_mode!r}")
        if np.any(np.asarray(self.eps, dtype=float) < 0):
            raise ValueError("uncertainty radii must be nonnegative")

    @property
    def irs(self):
        return ArrayGeometry(self.n_elements, self.bs.spacing)

    def user_angles(self):
        if self.rician.user_angles is None:
            return default_user_angles(self.n_users)
        if len(self.rician.user_angles) != self.n_users:
            raise ValueError("need one LoS angle per user")
        return self.rician.user_angles


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization.

    Rows of ``h`` are the direct BS to user channels ``h_k``; ``g_mat`` is the
    L x N BS to IRS matrix; rows of ``r`` and ``r_hat`` are the true and
    estimated IRS to user channels; ``eps`` holds the uncertainty radii.
    """

    h: np.ndarray
    g_mat: np.ndarray
    r: np.ndarray
    r_hat: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        g = np.atleast_2d(np.asarray(self.g_mat, dtype=complex))
        r = np.atleast_2d(np.asarray(self.r, dtype=complex))
        r_hat = np.atleast_2d(np.asarray(self.r_hat, dtype=complex))
        eps = np.broadcast_to(np.asarray(self.eps, dtype=float), (h.shape[0],)).copy()
        k, n = h.shape
        if g.shape[1] != n or r.shape != (k, g.shape[0]) or r_hat.shape != r.shape:
            raise ValueError(
                f"inconsistent channel shapes h{h.shape} G{g.shape} r{r.shape} r_hat{r_hat.shape}"
            )
        for name, arr in (("h", h), ("g_mat", g), ("r", r), ("r_hat", r_hat), ("eps", eps)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_antennas(self):
        return self.h.shape[1]

    @property
    def n_elements(self):
        return self.g_mat.shape[0]

    @property
    def n_users(self):
        return self.h.shape[0]

    def estimated(self):
        """The channel set as seen by the optimizer (``r`` replaced by ``r_hat``)."""
        return replace(self, r=self.r_hat)

    def without_irs(self):
        zeros = np.zeros_like(self.r)
        return replace(self, r=zeros, r_hat=zeros, eps=np.zeros_like(self.eps))

    def with_eps(self, eps):
        return replace(self, eps=eps)

    def with_true_r(self, r):
        return replace(self, r=r)

    def scaled(self, factor):
        """Every channel multiplied by ``factor`` (radii included)."""
        f = float(factor)
        return ChannelSet(self.h * f, self.g_mat, self.r * f, self.r_hat * f, self.eps * f)


def steering_vector(phi, geom):
    """ULA steering vector ``exp(j 2 pi m spacing sin(phi))`` for angle ``phi`` in degrees."""
    phi = float(phi)
    if not -90.0 <= phi <= 90.0:
        raise ValueError(f"angle {phi} deg outside [-90, 90]")
    m = np.arange(geom.n_antennas)
    return np.exp(2j * np.pi * geom.spacing * m * np.sin(np.deg2rad(phi)))


def steering_matrix(angles, geom):
    """Steering vectors for several angles, one per column (N x M)."""
    angles = np.asarray(angles, dtype=float)
    if np.any(np.abs(angles) > 90.0):
        raise ValueError("angles must lie in [-90, 90] degrees")
    m = np.arange(geom.n_antennas)[:, None]
    return np.exp(2j * np.pi * geom.spacing * m * np.sin(np.deg2rad(angles))[None, :])


def path_loss(d, alpha, model):
    """Distance-dependent power loss ``eta0 (d / d0)^-alpha``."""
    d = float(d)
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return model.eta0 * (d / model.d0) ** (-alpha)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _rician(pl, kfac, los, nlos):
    if np.isinf(kfac):
        return np.sqrt(pl) * los
    return np.sqrt(pl * kfac / (kfac + 1.0)) * los + np.sqrt(pl / (kfac + 1.0)) * nlos


def sample_uncertainty(r_hat, eps, seed, surface_only=False):
    """Random error vector with norm at most ``eps``.

    The direction is uniform on the complex sphere. Interior samples have
    norms distributed as in a uniform draw from the ball; ``surface_only``
    puts every sample on the sphere.

    Parameters
    ----------
    r_hat : array_like
        Estimated channel; only its shape is used.
    eps : float
        Ball radius.
    seed : int or numpy.random.Generator
    surface_only : bool
    """
    eps = float(eps)
    if eps < 0:
        raise ValueError(f"uncertainty radius must be nonnegative, got {eps}")
    r_hat = np.asarray(r_hat)
    if eps == 0:
        return np.zeros(r_hat.shape, dtype=complex)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = _cn(rng, r_hat.shape)
    d /= np.linalg.norm(d)
    if surface_only:
        return eps * d
    # uniform in the ball of real dimension 2L
    radius = eps * rng.uniform() ** (1.0 / (2 * r_hat.size))
    return radius * d


def sample_ball(r_hat, eps, n_samples, rng, surface_only=False):
    """``n_samples`` error vectors stacked as rows."""
    return np.stack([sample_uncertainty(r_hat, eps, rng, surface_only) for _ in range(n_samples)])


def resolve_eps(model, r_hat):
    eps = np.broadcast_to(np.asarray(model.eps, dtype=float), (model.n_users,))
    if model.eps_mode == "none":
        return np.zeros(model.n_users)
    if model.eps_mode == "relative":
        return eps * np.linalg.norm(r_hat, axis=1)
    return eps.copy()


def sample_channels(model, seed):
    """Draw one channel realization.

    ``G`` and ``r_k`` are Rician mixtures of a rank-one LoS term and i.i.d.
    CN(0, 1) scattering, the direct channels ``h_k`` are Rayleigh; each link
    is scaled by the square root of its path loss. The optimizer-side
    estimate ``r_hat`` is the drawn IRS-user channel; when uncertainty is
    configured the true channel is ``r_hat + delta`` with ``delta`` drawn
    inside the uncertainty ball.
    """
    n, l, k = model.bs.n_antennas, model.n_elements, model.n_users
    pl = model.path_loss
    geo = model.geometry
    ric = model.rician

    g_los = np.outer(steering_vector(ric.irs_arrival, model.irs),
                     steering_vector(ric.bs_departure, model.bs).conj())
    g_nlos = _cn(substream(seed, _STREAM_G), (l, n))
    g_mat = _rician(path_loss(geo.d_ib, pl.alpha_bi, pl), ric.k_ib, g_los, g_nlos)

    rng_r = substream(seed, _STREAM_R)
    angles = model.user_angles()
    r_hat = np.empty((k, l), dtype=complex)
    for i in range(k):
        los = steering_vector(angles[i], model.irs)
        r_hat[i] = _rician(path_loss(geo.d_iu_k[i], pl.alpha_iu, pl), ric.k_ui, los, _cn(rng_r, l))

    rng_h = substream(seed, _STREAM_H)
    h = np.empty((k, n), dtype=complex)
    for i in range(k):
        h[i] = np.sqrt(path_loss(geo.d_bu_k[i], pl.alpha_bu, pl)) * _cn(rng_h, n)

    eps = resolve_eps(model, r_hat)
    rng_d = substream(seed, _STREAM_DELTA)
    r = np.stack([r_hat[i] + sample_uncertainty(r_hat[i], eps[i], rng_d) for i in range(k)])
    return ChannelSet(h=h, g_mat=g_mat, r=r, r_hat=r_hat, eps=eps)


def random_phases(n_elements, seed):
    """Unit-modulus vector with uniform phases (the IRS starting point)."""
    rng = substream(seed, _STREAM_IRS_INIT)
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_elements))
