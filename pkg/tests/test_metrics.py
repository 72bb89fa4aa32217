from fractions import Fraction

import numpy as np
import pytest

from irs_isac import metrics
from irs_isac.channel import ArrayGeometry, ChannelSet, sample_channels, steering_vector

from conftest import P0, random_complex, small_model


def brute_pattern(C, angles, geom):
    out = []
    for phi in angles:
        a = steering_vector(phi, geom)
        out.append(sum(np.conj(a[i]) * C[i, j] * a[j]
                       for i in range(len(a)) for j in range(len(a))).real)
    return np.array(out)


def brute_sinr(ch, w, v, sigma2):
    out = []
    for k in range(ch.n_users):
        a = ch.h[k] + sum(v[l] * ch.r[k, l] * ch.g_mat[l] for l in range(ch.n_elements))
        gains = [abs(sum(a[n] * w[i, n] for n in range(ch.n_antennas))) ** 2
                 for i in range(ch.n_users)]
        out.append(gains[k] / (sum(g for i, g in enumerate(gains) if i != k) + sigma2))
    return np.array(out)


class TestBeampattern:
    def test_scaled_identity(self, grid):
        geom = ArrayGeometry(6)
        np.testing.assert_allclose(metrics.beampattern(P0 / 6 * np.eye(6), grid, geom), P0,
                                   rtol=1e-12)

    def test_matched_direction(self, grid):
        geom = ArrayGeometry(6)
        a = steering_vector(0.0, geom)
        pat = metrics.beampattern(np.outer(a, a.conj()) * P0 / 6, grid, geom)
        assert pat[grid.center_index] == pytest.approx(6 * P0, rel=1e-12)
        assert np.argmax(pat) == grid.center_index

    def test_brute_force(self, rng, grid):
        geom = ArrayGeometry(5)
        X = random_complex(rng, 5, 5)
        C = X @ X.conj().T
        angles = grid.angles[::9]
        np.testing.assert_allclose(metrics.beampattern(C, angles, geom),
                                   brute_pattern(C, angles, geom), rtol=1e-10)

    def test_non_hermitian(self, grid):
        with pytest.raises(ValueError):
            metrics.beampattern(np.array([[1.0, 1.0], [0.0, 1.0]]), grid, ArrayGeometry(2))


class TestPslr:
    def test_flat(self, grid):
        assert metrics.pslr(np.ones(181), grid) == pytest.approx(0.0, abs=1e-12)

    def test_ten_db(self, grid):
        pat = np.ones(181)
        pat[grid.center_index] = 10.0
        assert metrics.pslr(pat, grid) == pytest.approx(10.0, abs=1e-12)

    def test_zero_sidelobes(self, grid):
        pat = np.zeros(181)
        pat[grid.mainlobe] = 1.0
        assert metrics.pslr(pat, grid) == np.inf

    def test_scale_invariant(self, rng, grid):
        pat = rng.uniform(0.1, 1.0, 181)
        assert metrics.pslr(3.7 * pat, grid) == pytest.approx(metrics.pslr(pat, grid), abs=1e-12)


class TestMse:
    def test_identical(self):
        assert metrics.mse(np.arange(5.0), np.arange(5.0)) == 0.0

    def test_constant_offset(self):
        assert metrics.mse(np.full(7, 2.5), np.full(7, 2.0)) == pytest.approx(0.25, rel=1e-15)

    def test_exact_summation(self, rng):
        a, b = rng.uniform(0, 1e-2, 181), rng.uniform(0, 1e-2, 181)
        exact = sum((Fraction(x) - Fraction(y)) ** 2 for x, y in zip(a, b)) / len(a)
        assert metrics.mse(a, b) == pytest.approx(float(exact), rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metrics.mse(np.ones(3), np.ones(4))


class TestSinr:
    def test_single_user_direct(self):
        ch = ChannelSet([[1.0, 0.0]], np.zeros((3, 2)), np.zeros((1, 3)), np.zeros((1, 3)), 0.0)
        c = 0.3 - 0.2j
        sinr = metrics.achieved_sinr(ch, np.array([[c, 0.0]]), np.ones(3), 0.5)
        assert sinr[0] == pytest.approx(abs(c) ** 2 / 0.5, rel=1e-14)

    def test_swapped_users(self, rng):
        h = random_complex(rng, 2, 3)
        w = random_complex(rng, 2, 3)
        z = np.zeros((2, 1))
        ch = ChannelSet(h, np.zeros((1, 3)), z, z, 0.0)
        swapped = ChannelSet(h[::-1], np.zeros((1, 3)), z, z, 0.0)
        a = metrics.achieved_sinr(ch, w, [1.0], 0.1)
        b = metrics.achieved_sinr(swapped, w[::-1], [1.0], 0.1)
        np.testing.assert_allclose(a, b[::-1], rtol=1e-14)

    def test_brute_force(self, rng):
        ch = sample_channels(small_model(n=3, l=4, k=3), 2)
        w = random_complex(rng, 3, 3) * 1e-1
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        np.testing.assert_allclose(metrics.achieved_sinr(ch, w, v, 1e-14),
                                   brute_sinr(ch, w, v, 1e-14), rtol=1e-12)

    def test_warns_on_modulus(self):
        ch = sample_channels(small_model(n=2, l=3, k=1), 0)
        with pytest.warns(UserWarning):
            metrics.achieved_sinr(ch, np.ones((1, 2)), 0.5 * np.ones(3), 1.0)


class TestWorstCase:
    def setup_method(self):
        self.ch = sample_channels(small_model(eps_mode="relative", eps=0.05), 3)
        rng = np.random.default_rng(5)
        self.w = random_complex(rng, 2, 4) * 0.1
        self.v = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))

    def test_zero_radius(self):
        ch = self.ch.with_eps(np.zeros(2))
        worst = metrics.worst_case_sinr_sampled(ch, self.w, self.v, 1e-14, 20)
        np.testing.assert_allclose(
            worst, metrics.achieved_sinr(ch.with_true_r(ch.r_hat), self.w, self.v, 1e-14),
            rtol=1e-12)

    def test_monotone_in_radius(self):
        values = [metrics.worst_case_sinr_sampled(self.ch.with_eps(self.ch.eps * s), self.w,
                                                  self.v, 1e-14, 200, seed=1)
                  for s in (0.0, 0.5, 1.0, 2.0)]
        for small, large in zip(values, values[1:]):
            assert np.all(large <= small * (1 + 1e-12))

    def test_nested_in_samples(self):
        few = metrics.worst_case_sinr_sampled(self.ch, self.w, self.v, 1e-14, 50, seed=4)
        many = metrics.worst_case_sinr_sampled(self.ch, self.w, self.v, 1e-14, 400, seed=4)
        assert np.all(many <= few)

    def test_bounded_by_nominal(self):
        worst = metrics.worst_case_sinr_sampled(self.ch, self.w, self.v, 1e-14, 100)
        nominal = metrics.achieved_sinr(self.ch.with_true_r(self.ch.r_hat), self.w, self.v, 1e-14)
        assert np.all(worst <= nominal * (1 + 1e-12))

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            metrics.worst_case_sinr_sampled(self.ch, self.w, self.v, 1.0, 0)


def test_power_identity(rng):
    w = random_complex(rng, 3, 5)
    assert np.real(np.trace(metrics.covariance(w))) == pytest.approx(metrics.total_power(w),
                                                                       rel=1e-12)
