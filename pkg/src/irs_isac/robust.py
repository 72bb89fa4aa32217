"""Worst-case robust design for a norm-bounded error on the IRS to user channels.

The optimizer knows ``r_hat_k`` and a radius ``eps_k`` with the true channel
somewhere in ``{r_hat_k + Delta : ||Delta|| <= eps_k}``.

* precoders: the FP surrogate constraint is a quadratic function of
  ``Delta``; the S-procedure turns "holds on the ball" into one LMI per user;
* IRS phases: a Schur complement makes the constraint linear in the
  channel, and the bound for a linear uncertainty term gives an LMI that is
  affine in ``v``, used inside the same penalty CCP as the nominal step;
* multipliers: per-user SDP maximizing that LMI's slack.
"""
from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize_scalar

from . import conic
from .ao import (INFEASIBLE, OK, SINR_SLACK, AoControls, BeamformingSolution, CcpControls,
                 ConvergenceTrace, NominalUserConstraint, Normalizer, PenaltyCcp, SinrTargets,
                 _usable, alternate, effective_channel, finish_lifted, fp_constraints,
                 initial_point, residual_scale, run_ccp, solve_lifted, update_u,
                 v_step_coefficients)


@dataclass
class RobustWStepData:
    """Coefficients of ``Delta^T X Delta^* + 2 Re{Delta^T x} + d`` for one user."""

    X: object
    x: object
    d: object


@dataclass
class RobustVStepData:
    z1: object
    z2: object
    g: object
    D: object


def _re(z):
    return cp.real(z) if isinstance(z, cp.Expression) else np.real(z)


def _is_expr(*items):
    return any(isinstance(z, cp.Expression) for z in items)


def nominal_channel(ch, v, k):
    """``h_k + G^T diag(v) r_hat_k`` as a row-convention vector."""
    return ch.h[k] + (ch.r_hat[k] * v) @ ch.g_mat


def w_step_data(ch, v, u, Wbar, wbar, k, sigma2):
    """Per-user quadratic-in-``Delta`` form of the lifted surrogate constraint.

    ``Wbar``/``wbar`` may be arrays or cvxpy expressions (lists over users).
    """
    B = v[:, None] * ch.g_mat  # Theta G
    c0 = nominal_channel(ch, v, k)
    others = [i for i in range(ch.n_users) if i != k]
    uk = u[k]
    uk2 = abs(uk) ** 2
    if others:
        sig = sum(Wbar[i] for i in others)
        X = -uk2 * (B @ sig @ B.conj().T)
        x = np.conj(uk) * (B @ wbar[k]) - uk2 * (B @ sig @ c0.conj())
        quad = _re(c0 @ sig @ c0.conj())
    else:
        X = np.zeros((ch.n_elements, ch.n_elements), dtype=complex)
        x = np.conj(uk) * (B @ wbar[k])
        quad = 0.0
    d = 2 * _re(np.conj(uk) * (c0 @ wbar[k])) - uk2 * quad - uk2 * sigma2
    return RobustWStepData(X, x, d)


def quadratic_value(data, delta):
    """``Delta^T X Delta^* + Delta^T x + x^H Delta^* + d`` for numeric data."""
    delta = np.asarray(delta)
    val = delta @ data.X @ delta.conj() + 2 * np.real(delta @ data.x) + data.d
    return float(np.real(val))


def build_w_lmi(data, gamma, eps, kappa):
    """``[[kappa I + X, x], [x^H, d - gamma - kappa eps^2]]`` (cvxpy or numpy)."""
    L = data.x.shape[0]
    if not _is_expr(data.X, data.x, data.d, kappa):
        top = np.hstack([kappa * np.eye(L) + data.X, data.x[:, None]])
        bottom = np.hstack([np.conj(data.x)[None, :], [[data.d - gamma - kappa * eps ** 2]]])
        return np.vstack([top, bottom])
    x = cp.reshape(data.x, (L, 1), order="F")
    corner = cp.reshape(data.d - gamma - kappa * eps ** 2, (1, 1), order="F")
    return cp.bmat([[kappa * np.eye(L) + data.X, x], [cp.conj(x).T, corner]])


def unit_ball(data, eps):
    """The same quadratic in ``y = Delta / eps``, which keeps the LMI blocks balanced.

    In ``Delta`` coordinates the optimal multiplier scales like ``1 / eps^2``
    and the solver's absolute residuals swamp it for large radii.
    """
    return RobustWStepData(eps ** 2 * data.X, eps * data.x, data.d)


def robust_w_constraints(ch, v, u, gamma, eps, sigma2=1.0):
    """S-procedure constraints of the robust precoder step; ``eps_k = 0`` gives the nominal one."""
    nominal = fp_constraints(effective_channel(ch.estimated(), v), u, gamma)

    def build(Wbar, wbar):
        plain = list(nominal(Wbar, wbar)) if np.any(np.asarray(eps) == 0) else None
        for k in range(ch.n_users):
            if eps[k] == 0:
                # no uncertainty: the surrogate constraint itself
                yield plain[k]
                continue
            data = unit_ball(w_step_data(ch, v, u, Wbar, wbar, k, sigma2), eps[k])
            kappa = cp.Variable(nonneg=True)
            yield from conic.hermitian_lmi(build_w_lmi(data, gamma[k], 1.0, kappa))

    return build


def update_w_robust(ch, v, u, R, targets, p0, eps=None, tol=conic.DEFAULT_TOL):
    """Robust lifted precoder SDP with extraction and power repair.

    The extracted precoders are checked with :func:`robust_sinr_certificate`;
    the lifted columns are the fallback since they satisfy the LMI's
    guarantee by construction.
    """
    R = getattr(R, "R", R)
    eps = ch.eps if eps is None else np.broadcast_to(np.asarray(eps, float), (ch.n_users,))
    norm = Normalizer(p0, targets.sigma2)
    nch = norm.channels(ch.with_eps(eps))
    status, W_hat, obj = solve_lifted(
        ch.n_users, ch.n_antennas, norm.cov_in(R),
        robust_w_constraints(nch, v, norm.u_in(u), targets.array, nch.eps), tol)
    return finish_lifted(status, W_hat, obj, norm, R, p0,
                         lambda w: robust_feasible(ch.with_eps(eps), w, v, targets, 0.0))


def _sinr_quadratic(ch, w, v, k, gamma, sigma2):
    """``y^H Q y + 2 Re{y^H q} + c`` with ``y = Delta^*``: user ``k``'s SINR condition."""
    w = np.atleast_2d(w)
    B = v[:, None] * ch.g_mat
    c0 = nominal_channel(ch, v, k)
    s = w @ c0
    z = (B @ w.T).T  # z_i = Theta G w_i
    weights = np.full(ch.n_users, -gamma)
    weights[k] = 1.0
    Q = (z.T * weights) @ z.conj()
    q = (z.T * weights) @ s.conj()
    c = float(np.sum(weights * np.abs(s) ** 2) - gamma * sigma2)
    return Q, q, c


def robust_sinr_certificate(ch, w, v, targets, slack=0.0):
    """Largest ``min eig`` of the S-lemma matrix over ``kappa`` for every user.

    A nonnegative entry certifies ``SINR_k >= Gamma_k (1 - slack)`` for every
    error in the ball (the S-lemma is lossless for one quadratic
    constraint). Values are relative to the size of the quadratic form.
    """
    norm = Normalizer(1.0, targets.sigma2)
    nch = norm.channels(ch)
    out = np.empty(ch.n_users)
    for k in range(ch.n_users):
        gamma = targets.gamma[k] * (1.0 - slack)
        Q, q, c = _sinr_quadratic(nch, w, v, k, gamma, 1.0)
        e = float(nch.eps[k]) if nch.eps[k] > 0 else 0.0
        if e > 0:
            # unit-ball coordinates, as in the precoder LMI
            Q, q = e ** 2 * Q, e * q
        size = max(np.abs(Q).max(), np.abs(q).max(), abs(c), 1e-300)
        Q, q, c = Q / size, q / size, c / size
        if e == 0.0 or c <= 0:
            out[k] = c
            continue
        e2 = 1.0

        def neg_min_eig(kappa):
            mat = np.block([[Q + kappa * np.eye(Q.shape[0]), q[:, None]],
                            [q.conj()[None, :], np.array([[c - kappa * e2]])]])
            return -np.linalg.eigvalsh(mat)[0]

        res = minimize_scalar(neg_min_eig, bounds=(0.0, c / e2), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, c / e2)})
        out[k] = -res.fun
    return out


def robust_feasible(ch, w, v, targets, slack=SINR_SLACK, tol=1e-9):
    """Certificate test.

    ``tol`` absorbs the ``kappa`` search and is not applied at ``eps_k = 0``.
    """
    cert = robust_sinr_certificate(ch, w, v, targets, slack)
    return bool(np.all(cert >= np.where(np.asarray(ch.eps) > 0, -tol, 0.0)))


def v_step_data(ch, w, u, v, k, c0=None):
    """``z1, z2, g, D`` of the robust IRS-step LMI at ``v`` (array or expression).

    ``c0`` overrides the nominal channel ``h_k + G^T Theta r_hat_k``; it must
    be consistent with ``v``.
    """
    w = np.atleast_2d(w)
    others = [i for i in range(ch.n_users) if i != k]
    if c0 is None:
        c0 = ch.h[k] + (ch.r_hat[k] * v) @ ch.g_mat if not _is_expr(v) else \
            ch.h[k] + ch.g_mat.T @ cp.multiply(ch.r_hat[k], v)
    uk = u[k]
    gw = ch.g_mat @ w[k]  # G w_k
    z1 = np.conj(uk) * (w[k] @ c0)
    if _is_expr(v):
        g = uk * cp.multiply(np.conj(gw), cp.conj(v))
    else:
        g = uk * np.conj(gw) * np.conj(v)
    if others:
        S = w[others]
        z2 = uk * (S @ c0)
        SG = uk * (S @ ch.g_mat.T)
        D = SG @ cp.diag(v) if _is_expr(v) else SG * v[None, :]
    else:
        z2 = D = None
    return RobustVStepData(z1, z2, g, D)


def build_v_lmi(data, u_k, gamma, eps, t_term, delta, sigma=1.0):
    """Hermitian (K+1+L)-square LMI matrix for one user.

    Block rows: the SINR entry, the ``K-1`` interference entries, the noise
    entry and the ``L`` uncertainty directions. ``t_term`` is the residual
    already in SINR units.
    """
    z2, D = data.z2, data.D
    m = 0 if z2 is None else z2.shape[0]
    L = data.g.shape[0]
    numeric = not _is_expr(data.z1, z2, data.g, D, u_k, t_term, delta)
    if numeric:
        lmi = np.zeros((2 + m + L,) * 2, dtype=complex)
        lmi[0, 0] = 2 * np.real(data.z1) - t_term - gamma - delta
        lmi[1 + m, 0] = u_k * sigma
        lmi[0, 1 + m] = np.conj(u_k) * sigma
        lmi[1 + m, 1 + m] = 1.0
        lmi[0, 2 + m:] = -eps * np.conj(data.g)
        lmi[2 + m:, 0] = -eps * data.g
        if m:
            lmi[1:1 + m, 0] = z2
            lmi[0, 1:1 + m] = np.conj(z2)
            lmi[1:1 + m, 1:1 + m] = np.eye(m)
            lmi[1:1 + m, 2 + m:] = -eps * D
            lmi[2 + m:, 1:1 + m] = -eps * D.conj().T
        lmi[2 + m:, 2 + m:] = delta * np.eye(L)
        return lmi

    def col(vec, n):
        return cp.reshape(vec, (n, 1), order="F")

    def scalar(val):
        return cp.reshape(val, (1, 1), order="F")

    g = col(data.g, L)
    a11 = scalar(2 * _re(data.z1) - t_term - gamma - delta)
    noise = scalar(u_k * sigma)
    one = np.ones((1, 1))
    first = [a11]
    if m:
        z2c = col(z2, m)
        first.append(cp.conj(z2c).T)
    first += [cp.conj(noise).T, -eps * cp.conj(g).T]
    rows = [first]
    if m:
        rows.append([z2c, np.eye(m), np.zeros((m, 1)), -eps * D])
    noise_row = [noise]
    if m:
        noise_row.append(np.zeros((1, m)))
    noise_row += [one, np.zeros((1, L))]
    rows.append(noise_row)
    last = [-eps * g]
    if m:
        last.append(-eps * cp.conj(D).T)
    last += [np.zeros((L, 1)), delta * np.eye(L)]
    rows.append(last)
    return cp.bmat(rows)


class _RobustCcp(PenaltyCcp):
    """Robust IRS step: one LMI per user in place of the second-order cones.

    A user with ``eps_k = 0`` has no uncertainty block; the LMI is then the
    Schur form of the nominal cone, which is used directly.
    """

    def __init__(self, ch, w, u, targets, eps, coeffs):
        self.ch, self.w, self.u = ch, np.atleast_2d(w), np.asarray(u)
        self.targets, self.eps = targets, eps
        self.scales = [residual_scale(cf) for cf in coeffs]
        self.delta = cp.Variable(ch.n_users, nonneg=True)
        self.nominal = {k: NominalUserConstraint(coeffs[k], ch.n_elements)
                        for k in range(ch.n_users) if eps[k] == 0}
        # real and imaginary parts apart: complex parameters disable cvxpy's DPP cache
        self.c0 = [(cp.Parameter(ch.n_antennas), cp.Parameter(ch.n_antennas))
                   for _ in range(ch.n_users)]
        super().__init__(ch.n_elements, ch.n_users)

    def user_constraints(self):
        ch = self.ch
        v = self.v_expr
        l = ch.n_elements
        va = self.anchor[:l] + 1j * self.anchor[l:]
        for k in range(ch.n_users):
            if k in self.nominal:
                yield self.nominal[k].constraint(self.x, self.anchor, self.t[k])
                continue
            c0 = self.c0[k][0] + 1j * self.c0[k][1] + ch.g_mat.T @ cp.multiply(ch.r_hat[k], v - va)
            data = v_step_data(ch, self.w, self.u, v, k, c0=c0)
            lmi = build_v_lmi(data, self.u[k], self.targets.gamma[k], float(self.eps[k]),
                              self.t[k] / self.scales[k], self.delta[k])
            yield from conic.hermitian_lmi(lmi, embed=True)

    def recentre(self, anchor):
        for k in range(self.ch.n_users):
            if k in self.nominal:
                self.nominal[k].recentre(anchor)
                continue
            c0 = nominal_channel(self.ch, anchor, k)
            self.c0[k][0].value, self.c0[k][1].value = c0.real, c0.imag


def robust_ccp_problem(ch, w, u, targets, eps=None, p0=None):
    """Robust penalty-CCP subproblem in normalized units.

    ``ch``, ``w`` and ``u`` are physical. The residual weights match the
    nominal IRS step so that ``eps = 0`` reproduces it.
    """
    eps = ch.eps if eps is None else np.broadcast_to(np.asarray(eps, float), (ch.n_users,))
    p0 = float(np.sum(np.abs(w) ** 2)) if p0 is None else p0
    norm = Normalizer(p0, targets.sigma2)
    nch = norm.channels(ch.with_eps(eps).estimated())
    wn, un = norm.w_in(w), norm.u_in(u)
    ntargets = SinrTargets(targets.gamma, 1.0)
    coeffs = v_step_coefficients(nch, wn, un, ntargets)
    return _RobustCcp(nch, wn, un, ntargets, nch.eps, coeffs)


def update_v_robust(ch, w, u, v_prev, targets, eps=None, controls=CcpControls(),
                    tol=conic.DEFAULT_TOL, p0=None):
    """Robust IRS step by penalty CCP anchored at ``v_prev``; returns ``(v, ccp_trace)``."""
    problem = robust_ccp_problem(ch, w, u, targets, eps, p0)
    return run_ccp(problem, v_prev, controls, tol)


def _u_lmi_problem(nch, wn, v, k, gamma, eps, u_fixed=None):
    u = cp.Variable(complex=True) if u_fixed is None else u_fixed
    delta = cp.Variable(nonneg=True)
    data = _v_data_in_u(nch, wn, v, k, u)
    lmi = build_v_lmi(data, u, gamma, eps, 0.0, delta)
    prob = cp.Problem(cp.Maximize(delta), conic.hermitian_lmi(lmi, embed=True))
    return prob, u, delta


def _v_data_in_u(ch, w, v, k, u):
    """``v_step_data`` with a unit multiplier, scaled by ``u`` (affine in ``u``)."""
    unit = v_step_data(ch, w, np.ones(ch.n_users), v, k)
    z1 = cp.conj(u) * unit.z1 if isinstance(u, cp.Expression) else np.conj(u) * unit.z1
    z2 = None if unit.z2 is None else u * unit.z2
    D = None if unit.D is None else u * unit.D
    return RobustVStepData(z1, z2, u * unit.g, D)


def robust_delta(ch, w, v, u, k, targets, eps=None, tol=conic.DEFAULT_TOL):
    """Largest LMI slack ``delta_k`` at a fixed multiplier (``-inf`` if none is feasible)."""
    eps = ch.eps if eps is None else np.broadcast_to(np.asarray(eps, float), (ch.n_users,))
    p0 = float(np.sum(np.abs(w) ** 2))
    norm = Normalizer(p0, targets.sigma2)
    nch = norm.channels(ch.with_eps(eps).estimated())
    prob, _, delta = _u_lmi_problem(nch, norm.w_in(w), v, k, targets.gamma[k],
                                    float(nch.eps[k]), u_fixed=complex(norm.u_in(u)))
    sol = conic.solve_problem(prob, tol=tol)
    return float(delta.value) if _usable(sol) else -np.inf


def update_u_robust(ch, w, v, eps, targets, u_prev=None, tol=conic.DEFAULT_TOL, p0=None):
    """Per-user multiplier SDP maximizing the robust IRS-LMI slack at ``t_k = 0``.

    Returns ``(u, delta, flags)``; a user whose SDP has no solution keeps
    ``u_prev`` (or the closed-form update) and is flagged. For ``eps_k = 0``
    the slack is concave quadratic in ``u_k`` with the closed-form maximizer.
    """
    eps = ch.eps if eps is None else np.broadcast_to(np.asarray(eps, float), (ch.n_users,))
    p0 = float(np.sum(np.abs(w) ** 2)) if p0 is None else p0
    norm = Normalizer(p0, targets.sigma2)
    nch = norm.channels(ch.with_eps(eps).estimated())
    wn = norm.w_in(w)
    if u_prev is None:
        u_prev = update_u(ch.estimated(), v, w, targets.sigma2)
    u_out = np.array(u_prev, dtype=complex)
    delta_out = np.zeros(ch.n_users)
    flags = []
    closed = update_u(ch.estimated(), v, w, targets.sigma2)
    for k in range(ch.n_users):
        if nch.eps[k] == 0:
            u_out[k] = closed[k]
            un = norm.u_in(u_out)
            data = v_step_data(nch, wn, un, v, k)
            z2 = 0.0 if data.z2 is None else float(np.sum(np.abs(data.z2) ** 2))
            slack = 2 * np.real(data.z1) - targets.gamma[k] - z2 - abs(un[k]) ** 2
            delta_out[k] = max(float(slack), 0.0)
            continue
        prob, u, delta = _u_lmi_problem(nch, wn, v, k, targets.gamma[k], float(nch.eps[k]))
        sol = conic.solve_problem(prob, tol=tol)
        if not _usable(sol) or u.value is None:
            flags.append(k)
            continue
        u_out[k] = norm.u_out(complex(u.value))
        delta_out[k] = max(float(delta.value), 0.0)
    return u_out, delta_out, flags


def solve_robust(ch, R, targets, p0, eps=None, controls=CcpControls(), ao_controls=AoControls(),
                 seed=0):
    """Robust AO on the estimated channels; SINR guarantees hold over the whole error ball.

    ``eps`` defaults to ``ch.eps``. Feasibility of every accepted iterate is
    certified with :func:`robust_sinr_certificate`.
    """
    eps = ch.eps if eps is None else np.broadcast_to(np.asarray(eps, float), (ch.n_users,))
    est = ch.with_eps(eps).estimated()
    start = initial_point(est, R, targets, p0, seed, ao_controls.tol)
    if start is None:
        n, l, k = ch.n_antennas, ch.n_elements, ch.n_users
        sol = BeamformingSolution(np.full((k, n), np.nan + 0j), np.full(l, np.nan + 0j),
                                  np.full(k, np.nan + 0j), INFEASIBLE, np.nan)
        return sol, ConvergenceTrace(stop_reason="initialization_infeasible")
    v0, w0, u0 = start

    def w_step(v, u):
        return update_w_robust(est, v, u, R, targets, p0, eps, ao_controls.tol)

    def v_step(w, u, v):
        u, _, _ = update_u_robust(est, w, v, eps, targets, u, ao_controls.tol, p0)
        v_new, ccp = update_v_robust(est, w, u, v, targets, eps, controls, ao_controls.tol, p0)
        return v_new, ccp.status

    def u_step(w, v, u):
        return update_u_robust(est, w, v, eps, targets, u, ao_controls.tol, p0)[0]

    def feasible(w, v):
        return robust_feasible(est, w, v, targets)

    return alternate(est, R, targets, p0, w_step, v_step, u_step, ao_controls, v0, w0, u0,
                     feasible_fn=feasible)
