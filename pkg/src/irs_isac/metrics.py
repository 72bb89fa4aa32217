"""Beampattern quality and communication metrics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import sample_uncertainty, steering_matrix, substream

_STREAM_VALIDATION = 11


@dataclass(frozen=True, eq=False)
class BeampatternResult:
    angles: np.ndarray
    desired: np.ndarray
    achieved: np.ndarray


def covariance(w):
    """Transmit covariance ``sum_k w_k w_k^H`` of precoders stacked as rows."""
    w = np.atleast_2d(w)
    return w.T @ w.conj()


def beampattern(C, grid, geom):
    """Transmit power ``a^H(phi) C a(phi)`` at every grid angle (watts)."""
    C = np.asarray(C, dtype=complex)
    if np.max(np.abs(C - C.conj().T), initial=0.0) > 1e-9 * max(1.0, float(np.max(np.abs(C)))):
        raise ValueError("covariance is not Hermitian")
    angles = getattr(grid, "angles", grid)
    steer = steering_matrix(angles, geom)
    return np.real(np.einsum("im,ij,jm->m", steer.conj(), C, steer))


def pattern_result(R, w, grid, geom):
    desired = np.maximum(beampattern(R, grid, geom), 0.0)
    achieved = np.maximum(beampattern(covariance(w), grid, geom), 0.0)
    return BeampatternResult(np.asarray(grid.angles), desired, achieved)


def pslr(pattern, grid):
    """Peak mainlobe power over peak sidelobe power, in dB.

    Returns ``inf`` when every sidelobe sample is zero.
    """
    pattern = np.asarray(pattern, dtype=float)
    main, side = grid.mainlobe, grid.sidelobe
    if main.size == 0 or side.size == 0:
        raise ValueError("mainlobe and sidelobe index sets must be nonempty")
    peak_side = pattern[side].max()
    if peak_side <= 0:
        return np.inf
    return float(10.0 * np.log10(pattern[main].max() / peak_side))


def mse(achieved, desired):
    """Mean squared difference of two beampatterns over the whole grid."""
    achieved = np.asarray(achieved, dtype=float)
    desired = np.asarray(desired, dtype=float)
    if achieved.shape != desired.shape:
        raise ValueError(f"pattern lengths differ: {achieved.shape} vs {desired.shape}")
    return float(np.mean((achieved - desired) ** 2))


def effective_channels(h, g_mat, r, v):
    """Rows ``h_k^T + v^T diag(r_k) G`` for every user."""
    return np.asarray(h) + (np.asarray(r) * np.asarray(v)[None, :]) @ np.asarray(g_mat)


def sinr_from_channels(a, w, sigma2):
    gains = np.abs(np.asarray(a) @ np.atleast_2d(w).T) ** 2  # [k, i] = |a_k^T w_i|^2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + sigma2)


def achieved_sinr(ch, w, v, sigma2):
    """Linear SINR of every user on the true channels of ``ch``."""
    v = np.asarray(v)
    if v.size and np.max(np.abs(np.abs(v) - 1.0)) > 1e-3:
        warnings.warn("IRS coefficients are not unit modulus", stacklevel=2)
    a = effective_channels(ch.h, ch.g_mat, ch.r, v)
    return sinr_from_channels(a, w, sigma2)


def worst_case_sinr_sampled(ch, w, v, sigma2, n_samples=1000, seed=0):
    """Minimum SINR over sampled channel errors around ``r_hat``.

    Even-numbered draws lie on each user's uncertainty sphere and odd ones
    inside the ball. Every draw consumes the same random numbers whatever the
    radii, so for a fixed seed the sample sets are nested in ``n_samples``
    and scale with ``eps``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = substream(seed, _STREAM_VALIDATION)
    out = np.full(ch.n_users, np.inf)
    dim = 2 * ch.n_elements
    for s in range(n_samples):
        deltas = np.empty_like(ch.r_hat)
        for i in range(ch.n_users):
            unit = sample_uncertainty(ch.r_hat[i], 1.0, rng, surface_only=True)
            frac = rng.uniform() ** (1.0 / dim)
            deltas[i] = ch.eps[i] * (1.0 if s % 2 == 0 else frac) * unit
        a = effective_channels(ch.h, ch.g_mat, ch.r_hat + deltas, v)
        out = np.minimum(out, sinr_from_channels(a, w, sigma2))
    return out


def total_power(w):
    return float(np.sum(np.abs(w) ** 2))
