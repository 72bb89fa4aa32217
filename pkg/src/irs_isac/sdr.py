"""Bi-SDR baseline: relaxed precoder SDP and relaxed IRS SDP with exact SINR constraints."""
from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import conic
from .ao import (INFEASIBLE, OK, AoControls, BeamformingSolution, ConvergenceTrace, Normalizer,
                 WStep, _usable, alternate, effective_channel, per_antenna_residual,
                 power_repair, update_u)
from .channel import random_phases

SDR_SINR_SLACK = 1e-2


@dataclass
class LiftedIrsVariable:
    V_tilde: np.ndarray
    v_tilde: np.ndarray
    quality: float

    @property
    def v(self):
        """Unit-modulus IRS coefficients ``v~(1:L) / v~(L+1)`` with phases projected."""
        v = self.v_tilde[:-1] / self.v_tilde[-1]
        return np.exp(1j * np.angle(v))


def lifted_channels(ch):
    """``H_k = [diag(r_k) G; h_k^T]`` for every user, shape (K, L+1, N)."""
    top = ch.r[:, :, None] * ch.g_mat[None, :, :]
    return np.concatenate([top, ch.h[:, None, :]], axis=1)


def _w_sdr_lifted(a, R, gamma, tol):
    k, n = a.shape
    W = [conic.hermitian_psd(n)[1] for _ in range(k)]
    cov = sum(W)
    cons = [cp.real(cp.diag(cov)) == np.full(n, 1.0 / n)]
    for i in range(k):
        ai = a[i]
        gain = [cp.real(ai @ W[j] @ ai.conj()) for j in range(k)]
        interf = sum(gain[j] for j in range(k) if j != i)
        cons.append(gain[i] - gamma[i] * (1.0 + interf) >= 0)
    prob = cp.Problem(cp.Minimize(cp.norm(cov - R, "fro")), cons)
    sol = conic.solve_problem(prob, tol=tol)
    if not _usable(sol):
        return sol.status, None, np.nan
    return conic.OPTIMAL, [np.asarray(Wk.value) for Wk in W], float(prob.value) ** 2


def update_w_sdr(ch, v, R, targets, p0, tol=conic.DEFAULT_TOL):
    """Relaxed precoder SDP with exact SINR constraints at fixed IRS phases.

    ``v`` may also be the lifted vector ``[v; 1]``. Returns a
    :class:`~irs_isac.ao.WStep` whose ``W_hat`` are the N x N blocks.
    """
    v = np.asarray(v)
    if v.size == ch.n_elements + 1:
        v = v[:-1] / v[-1]
    R = getattr(R, "R", R)
    norm = Normalizer(p0, targets.sigma2)
    a = effective_channel(norm.channels(ch), v)
    status, W, obj = _w_sdr_lifted(a, norm.cov_in(R), targets.array, tol)
    if W is None:
        return WStep(None, None, INFEASIBLE if status == conic.INFEASIBLE else status, [], np.nan)
    w, quality = [], []
    for Wk in W:
        wk, q = conic.extract_rank_one(Wk)
        w.append(wk)
        quality.append(q)
    w = power_repair(norm.w_out(np.array(w)), p0)
    return WStep([Wk * p0 for Wk in W], w, OK, quality, per_antenna_residual(w, p0),
                 obj * p0 ** 2)


def _v_sdr_lifted(b, gamma, tol):
    """``b[k, i] = H_k w_i`` in normalized units."""
    k, _, m = b.shape
    V = conic.hermitian_psd(m)[1]
    t = cp.Variable(k, nonneg=True)
    cons = [cp.real(cp.diag(V)) == 1]
    for i in range(k):
        gain = [cp.real(b[i, j].conj() @ V @ b[i, j]) for j in range(k)]
        interf = sum(gain[j] for j in range(k) if j != i)
        cons.append(gain[i] - gamma[i] * (1.0 + interf) - t[i] >= 0)
    prob = cp.Problem(cp.Maximize(cp.sum(t)), cons)
    sol = conic.solve_problem(prob, tol=tol)
    if not _usable(sol):
        return sol.status, None, None
    return conic.OPTIMAL, np.asarray(V.value), np.asarray(t.value)


def update_v_sdr(ch, w, targets, p0=None, tol=conic.DEFAULT_TOL):
    """Relaxed IRS SDP maximizing the total SINR slack at fixed precoders.

    ``V~`` approximates ``v~* v~^T``, so the principal eigenvector is
    conjugated before the last-entry normalization.

    Returns
    -------
    (LiftedIrsVariable or None, ndarray or None, str)
    """
    w = np.atleast_2d(w)
    scale = 1.0 / np.sqrt(targets.sigma2)
    Hk = lifted_channels(ch) * scale
    b = np.einsum("kmn,in->kim", Hk, w)
    status, V, t = _v_sdr_lifted(b, targets.array, tol)
    if V is None:
        return None, None, INFEASIBLE if status == conic.INFEASIBLE else status
    q, quality = conic.extract_rank_one(V)
    v_tilde = np.conj(q)
    if abs(v_tilde[-1]) < 1e-8:
        raise conic.ExtractionError("lifted IRS vector has a vanishing last entry")
    return LiftedIrsVariable(V, v_tilde, quality), t, OK


def solve_sdr(ch, R, targets, p0, ao_controls=AoControls(), seed=0):
    """Alternate the two relaxed SDPs with the same stopping rule as the proposed method."""
    v0 = random_phases(ch.n_elements, seed)
    ws = update_w_sdr(ch, v0, R, targets, p0, ao_controls.tol)
    if ws.status != OK:
        n, l, k = ch.n_antennas, ch.n_elements, ch.n_users
        sol = BeamformingSolution(np.full((k, n), np.nan + 0j), np.full(l, np.nan + 0j),
                                  np.full(k, np.nan + 0j), INFEASIBLE, np.nan)
        return sol, ConvergenceTrace(stop_reason="initialization_infeasible")

    def w_step(v, u):
        return update_w_sdr(ch, v, R, targets, p0, ao_controls.tol)

    def v_step(w, u, v):
        lifted, _, status = update_v_sdr(ch, w, targets, p0, ao_controls.tol)
        if lifted is None:
            return v, status
        return lifted.v, status

    def u_step(w, v, u):
        return update_u(ch, v, w, targets.sigma2)

    return alternate(ch, R, targets, p0, w_step, v_step, u_step, ao_controls, v0, ws.w,
                     update_u(ch, v0, ws.w, targets.sigma2), sinr_slack=SDR_SINR_SLACK)
