import numpy as np
import pytest

from irs_isac.channel import (ArrayGeometry, ChannelModel, ChannelSet, PathLossModel,
                              RicianConfig, ScenarioGeometry, path_loss, random_phases,
                              sample_channels, sample_uncertainty, steering_matrix,
                              steering_vector)

from conftest import small_model

# 1e-3 * 25 ** -2.2 evaluated in 30-digit arithmetic
PL_25 = 8.404888974092055e-07


class TestSteering:
    def test_broadside_is_all_ones(self):
        np.testing.assert_array_equal(steering_vector(0.0, ArrayGeometry(4)), np.ones(4))

    def test_thirty_degrees_half_wavelength(self):
        a = steering_vector(30.0, ArrayGeometry(2, 0.5))
        np.testing.assert_allclose(a, [1.0, 1j], atol=1e-15)

    def test_odd_symmetry(self, rng):
        geom = ArrayGeometry(7)
        for phi in rng.uniform(-90, 90, 20):
            np.testing.assert_allclose(steering_vector(-phi, geom),
                                       np.conj(steering_vector(phi, geom)), atol=1e-12)

    def test_unit_modulus_and_norm(self):
        geom = ArrayGeometry(9, 0.37)
        A = steering_matrix(np.linspace(-90, 90, 31), geom)
        np.testing.assert_allclose(np.abs(A), 1.0, atol=1e-15)
        np.testing.assert_allclose(np.sum(np.abs(A) ** 2, axis=0), 9.0, rtol=1e-14)

    def test_matrix_matches_vectors(self):
        geom = ArrayGeometry(5)
        angles = [-40.0, 3.0, 77.0]
        A = steering_matrix(angles, geom)
        for j, phi in enumerate(angles):
            np.testing.assert_array_equal(A[:, j], steering_vector(phi, geom))

    @pytest.mark.parametrize("phi", [-90.5, 91.0])
    def test_domain(self, phi):
        with pytest.raises(ValueError):
            steering_vector(phi, ArrayGeometry(3))


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss(1.0, 3.5, PathLossModel()) == pytest.approx(1e-3, rel=1e-15)

    def test_frozen_value(self):
        assert path_loss(25.0, 2.2, PathLossModel()) == pytest.approx(PL_25, rel=1e-12)

    def test_decreasing(self):
        m = PathLossModel()
        for d in (0.3, 1.0, 20.0, 400.0):
            assert path_loss(2 * d, 2.2, m) < path_loss(d, 2.2, m)

    def test_rescaled_reference(self):
        # doubling all distances and the reference distance leaves the loss unchanged
        m2 = PathLossModel(d0=2.0)
        assert path_loss(50.0, 2.2, m2) == pytest.approx(PL_25, rel=1e-12)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_domain(self, d):
        with pytest.raises(ValueError):
            path_loss(d, 2.2, PathLossModel())


class TestSampleChannels:
    def test_deterministic(self):
        model = small_model()
        a, b = sample_channels(model, 11), sample_channels(model, 11)
        for name in ("h", "g_mat", "r", "r_hat", "eps"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_seeds_differ(self):
        model = small_model()
        assert not np.allclose(sample_channels(model, 1).h, sample_channels(model, 2).h)

    def test_shapes(self):
        ch = sample_channels(small_model(n=3, l=5, k=4), 0)
        assert ch.h.shape == (4, 3) and ch.g_mat.shape == (5, 3) and ch.r.shape == (4, 5)
        assert (ch.n_antennas, ch.n_elements, ch.n_users) == (3, 5, 4)

    def test_rician_limit(self):
        base = small_model()
        model = ChannelModel(base.bs, base.n_elements, base.n_users, base.geometry,
                             rician=RicianConfig(k_ib=1e9))
        ch = sample_channels(model, 3)
        los = np.outer(steering_vector(-30.0, model.irs), steering_vector(40.0, model.bs).conj())
        expected = np.sqrt(path_loss(25.0, 2.2, model.path_loss)) * los
        np.testing.assert_allclose(ch.g_mat, expected, rtol=1e-3)

    def test_direct_channel_second_moment(self):
        model = small_model(n=4, l=2, k=1)
        energy = np.mean([np.sum(np.abs(sample_channels(model, s).h) ** 2)
                          for s in range(10_000)])
        expected = 4 * path_loss(50.0, 3.5, model.path_loss)
        assert energy == pytest.approx(expected, rel=0.05)

    def test_no_uncertainty_means_exact_estimate(self):
        ch = sample_channels(small_model(), 5)
        np.testing.assert_array_equal(ch.r, ch.r_hat)
        np.testing.assert_array_equal(ch.eps, 0.0)

    @pytest.mark.parametrize("mode,value", [("relative", 0.05), ("absolute", 1e-6)])
    def test_error_inside_ball(self, mode, value):
        model = small_model(eps_mode=mode, eps=value)
        for seed in range(20):
            ch = sample_channels(model, seed)
            err = np.linalg.norm(ch.r - ch.r_hat, axis=1)
            assert np.all(err <= ch.eps * (1 + 1e-12))
            assert np.all(ch.eps > 0)

    def test_relative_radius(self):
        ch = sample_channels(small_model(eps_mode="relative", eps=0.02), 4)
        np.testing.assert_allclose(ch.eps, 0.02 * np.linalg.norm(ch.r_hat, axis=1), rtol=1e-14)

    def test_estimate_independent_of_radius(self):
        a = sample_channels(small_model(eps_mode="relative", eps=0.01), 8)
        b = sample_channels(small_model(eps_mode="relative", eps=0.05), 8)
        np.testing.assert_array_equal(a.r_hat, b.r_hat)
        np.testing.assert_array_equal(a.h, b.h)


class TestUncertainty:
    def test_zero_radius(self):
        np.testing.assert_array_equal(sample_uncertainty(np.ones(6), 0.0, 0), np.zeros(6))

    def test_surface(self):
        d = sample_uncertainty(np.ones(6), 0.5, 3, surface_only=True)
        assert np.linalg.norm(d) == pytest.approx(0.5, abs=1e-12)

    def test_interior_samples(self):
        rng = np.random.default_rng(0)
        norms = [np.linalg.norm(sample_uncertainty(np.ones(3), 0.2, rng)) for _ in range(10_000)]
        assert max(norms) <= 0.2 and max(norms) >= 0.99 * 0.2

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            sample_uncertainty(np.ones(2), -0.1, 0)


class TestChannelSet:
    def test_without_irs(self):
        ch = sample_channels(small_model(eps_mode="relative", eps=0.1), 0).without_irs()
        assert not np.any(ch.r) and not np.any(ch.r_hat) and not np.any(ch.eps)

    def test_immutable(self):
        ch = sample_channels(small_model(), 0)
        with pytest.raises(ValueError):
            ch.h[0, 0] = 1.0

    def test_inconsistent_shapes(self):
        with pytest.raises(ValueError):
            ChannelSet(np.ones((2, 3)), np.ones((4, 3)), np.ones((2, 5)), np.ones((2, 5)), 0.0)

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            ScenarioGeometry(25.0, (20.0,), (50.0, 50.0))
        with pytest.raises(ValueError):
            ArrayGeometry(0)


def test_random_phases_unit_modulus():
    v = random_phases(40, 9)
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-15)
    np.testing.assert_array_equal(v, random_phases(40, 9))
