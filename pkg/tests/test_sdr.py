import numpy as np
import pytest

from irs_isac import ao, sdr
from irs_isac.ao import SinrTargets
from irs_isac.channel import random_phases, sample_channels
from irs_isac.metrics import achieved_sinr

from conftest import P0, SIGMA2, random_complex, small_model


@pytest.fixture(scope="module")
def instances(small_setup):
    _, desired, targets, _ = small_setup
    model = small_model()
    return [sample_channels(model, s) for s in range(3)], desired, targets


def test_inactive_single_user(grid, small_setup):
    desired = small_setup[1]
    ch = sample_channels(small_model(k=1), 2)
    ws = sdr.update_w_sdr(ch, random_phases(6, 2), desired, SinrTargets.from_db(-90.0, SIGMA2),
                          P0)
    assert ws.status == ao.OK
    assert np.linalg.norm(sum(ws.W_hat) - desired.R) <= 1e-3 * np.linalg.norm(desired.R)


def test_precoder_step(instances):
    chs, desired, targets = instances
    for seed, ch in enumerate(chs):
        v = random_phases(6, seed)
        ws = sdr.update_w_sdr(ch, v, desired, targets, P0)
        assert ws.status == ao.OK
        np.testing.assert_allclose(np.real(np.diag(sum(ws.W_hat))), P0 / 4, rtol=1e-6)
        assert np.all(achieved_sinr(ch, ws.w, v, SIGMA2) >= targets.array * (1 - 1e-2))


def test_lifted_vector_input(instances):
    chs, desired, targets = instances
    v = random_phases(6, 0)
    a = sdr.update_w_sdr(chs[0], v, desired, targets, P0)
    b = sdr.update_w_sdr(chs[0], np.append(2 * v, 2.0), desired, targets, P0)
    np.testing.assert_allclose(a.w, b.w, rtol=1e-9)


def test_irs_step(instances):
    chs, desired, targets = instances
    for seed, ch in enumerate(chs):
        v = random_phases(6, seed)
        ws = sdr.update_w_sdr(ch, v, desired, targets, P0)
        lifted, t, status = sdr.update_v_sdr(ch, ws.w, targets, P0)
        assert status == ao.OK
        assert np.all(t >= -1e-9)
        np.testing.assert_allclose(np.real(np.diag(lifted.V_tilde)), 1.0, atol=1e-6)
        np.testing.assert_allclose(np.abs(lifted.v), 1.0, atol=1e-12)
        before = achieved_sinr(ch, ws.w, v, SIGMA2)
        after = achieved_sinr(ch, ws.w, lifted.v, SIGMA2)
        assert np.all(after >= before * (1 - 1e-3))


def test_lifting_consistency(rng, instances):
    ch = instances[0][0]
    w = random_complex(rng, 2, 4)
    v = random_phases(6, 5)
    vt = np.append(v, 1.0)
    H = sdr.lifted_channels(ch)
    a = ao.effective_channel(ch, v)
    Vt = np.outer(vt.conj(), vt)
    for k in range(2):
        for i in range(2):
            hw = H[k] @ w[i]
            lhs = np.real(hw.conj() @ Vt @ hw)
            assert lhs == pytest.approx(abs(a[k] @ w[i]) ** 2, rel=1e-9)


def test_solve(instances):
    chs, desired, targets = instances
    sol, trace = sdr.solve_sdr(chs[1], desired, targets, P0, seed=1)
    assert sol.status == ao.OK
    assert np.all(achieved_sinr(chs[1], sol.w, sol.v, SIGMA2) >= targets.array * (1 - 1e-2))
    assert np.sum(np.abs(sol.w) ** 2) == pytest.approx(P0, rel=1e-8)
    again = sdr.solve_sdr(chs[1], desired, targets, P0, seed=1)
    assert again[1].xi == trace.xi
    np.testing.assert_array_equal(again[0].v, sol.v)


def test_infeasible(instances):
    chs, desired, _ = instances
    sol, trace = sdr.solve_sdr(chs[0], desired, SinrTargets.from_db(150.0, SIGMA2, 2), P0)
    assert sol.status == ao.INFEASIBLE
