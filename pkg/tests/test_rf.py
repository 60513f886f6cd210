import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from coexsim import rf


def direct_pl(d3d, fc):
    return 32.4 + 21 * math.log10(d3d) + 20 * math.log10(fc)


class TestPathLoss:
    def test_100m_60ghz(self):
        assert rf.path_loss_umi_los(100.0, 60.0) == pytest.approx(109.963, abs=1e-3)

    def test_model_floor(self):
        assert rf.path_loss_umi_los(10.0, 60.0) == pytest.approx(88.963, abs=1e-3)

    def test_formula_shape_outside_validity(self):
        assert rf.path_loss_umi_los(1.0, 1.0) == pytest.approx(32.4, abs=1e-12)

    def test_validity_range_checked_when_d2d_given(self):
        with pytest.raises(rf.PathLossRangeError):
            rf.path_loss_umi_los(10.0, 60.0, d2d=5.0)
        with pytest.raises(rf.PathLossRangeError):
            rf.path_loss_umi_los(4000.0, 60.0, d2d=3999.0)
        rf.path_loss_umi_los(100.0, 60.0, d2d=99.6)

    def test_bad_frequency(self):
        with pytest.raises(ValueError):
            rf.path_loss_umi_los(100.0, 0.0)

    @given(
        st.floats(10, 3600), st.floats(10, 3600),
        st.floats(0.5, 100), st.floats(0.5, 100),
    )
    def test_strictly_increasing(self, d1, d2, f1, f2):
        if d1 != d2:
            lo, hi = sorted((d1, d2))
            assert rf.path_loss_umi_los(lo, f1) < rf.path_loss_umi_los(hi, f1)
        if f1 != f2:
            lo, hi = sorted((f1, f2))
            assert rf.path_loss_umi_los(d1, lo) < rf.path_loss_umi_los(d1, hi)

    def test_vectorized_matches_scalar(self):
        d = np.linspace(10, 3000, 37)
        expected = [direct_pl(x, 60.0) for x in d]
        np.testing.assert_allclose(rf.path_loss_umi_los(d, 60.0), expected, rtol=1e-14)


@pytest.mark.parametrize("n_ant, g_ele, expected", [
    (256, 15.0, 39.082),
    (1, 0.0, 0.0),
    (10, 5.0, 15.0),
])
def test_tx_array_gain(n_ant, g_ele, expected):
    assert rf.tx_array_gain(n_ant, g_ele) == pytest.approx(expected, abs=1e-3)


def test_tx_array_gain_rejects_zero_elements():
    with pytest.raises(ValueError):
        rf.tx_array_gain(0, 15.0)


class TestBeamPattern:
    @pytest.mark.parametrize("theta, phi, expected", [
        (90, 0, 0.0),
        (90, 65, 12.0),
        (90, 180, 30.0),
        (90, 90, 23.0059),
    ])
    def test_values(self, theta, phi, expected):
        assert rf.beam_pattern_loss(theta, phi, 30.0) == pytest.approx(expected, abs=1e-4)

    def test_range_on_one_degree_grid(self):
        theta, phi = np.meshgrid(np.arange(0, 181), np.arange(-180, 181))
        loss = rf.beam_pattern_loss(theta, phi, 30.0)
        assert loss.min() == 0.0 and loss.max() == 30.0
        assert np.all((loss >= 0) & (loss <= 30))
        # unique minimum at boresight
        zero = np.argwhere(loss == 0.0)
        assert len(zero) == 1
        assert theta[tuple(zero[0])] == 90 and phi[tuple(zero[0])] == 0

    @given(st.floats(0, 180), st.floats(0, 180))
    def test_azimuth_symmetry(self, theta, phi):
        assert rf.beam_pattern_loss(theta, phi) == rf.beam_pattern_loss(theta, -phi)


class TestAngularOffsets:
    def test_serving_link_is_boresight(self):
        theta, phi = rf.angular_offsets([0, 0, 10], [37.2, -12.9, 1.5], [37.2, -12.9, 1.5])
        assert (theta, phi) == (90.0, 0.0)
        assert rf.beam_pattern_loss(theta, phi) == 0.0

    def test_back_of_array(self):
        theta, phi = rf.angular_offsets([0, 0, 10], [50, 0, 1.5], [-50, 0, 1.5])
        assert abs(phi) == 180.0
        assert theta == 90.0
        assert rf.beam_pattern_loss(theta, phi, 30.0) == 30.0

    def test_quarter_turn(self):
        theta, phi = rf.angular_offsets([0, 0, 10], [100, 0, 1.5], [0, 100, 1.5])
        assert phi == pytest.approx(90.0, abs=1e-12)
        assert theta == pytest.approx(90.0, abs=1e-12)
        assert rf.beam_pattern_loss(theta, phi, 30.0) == pytest.approx(23.0, abs=0.01)

    def test_zero_length_direction(self):
        with pytest.raises(ValueError):
            rf.angular_offsets([0, 0, 10], [0, 0, 10], [5, 5, 1.5])

    @settings(max_examples=200)
    @given(
        st.tuples(*[st.floats(-500, 500)] * 2),
        st.tuples(*[st.floats(-500, 500)] * 2),
        st.tuples(*[st.floats(-500, 500)] * 2),
        st.floats(-1000, 1000), st.floats(-1000, 1000), st.floats(-math.pi, math.pi),
    )
    def test_translation_rotation_invariance(self, bs, tgt, vic, dx, dy, rot):
        # azimuth is undefined for points directly below the array
        assume(math.dist(bs, tgt) > 1.0 and math.dist(bs, vic) > 1.0)
        b = np.array([*bs, 10.0])
        t = np.array([*tgt, 1.5])
        v = np.array([*vic, 1.5])
        theta0, phi0 = rf.angular_offsets(b, t, v)

        c, s = math.cos(rot), math.sin(rot)
        R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        shift = np.array([dx, dy, 0.0])
        theta1, phi1 = rf.angular_offsets(R @ b + shift, R @ t + shift, R @ v + shift)
        assert theta1 == pytest.approx(theta0, abs=1e-6)
        # compare on the circle: +-180 are the same direction
        assert abs(rf.wrap_180(phi1 - phi0)) < 1e-6

    def test_phi_wrapped(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-300, 300, size=(1000, 3, 2))
        b = np.concatenate([pts[:, 0], np.full((1000, 1), 10.0)], axis=1)
        t = np.concatenate([pts[:, 1], np.full((1000, 1), 1.5)], axis=1)
        v = np.concatenate([pts[:, 2], np.full((1000, 1), 1.5)], axis=1)
        _, phi = rf.angular_offsets(b, t, v)
        assert np.all((phi >= -180) & (phi <= 180))

    def test_link_geometry(self):
        g = rf.LinkGeometry.from_points([0, 0, 10], [100, 0, 1.5], [30, 40, 1.5])
        assert g.d2d == pytest.approx(50.0)
        assert g.d3d == pytest.approx(math.sqrt(50.0**2 + 8.5**2), rel=1e-9)
        assert g.d3d == pytest.approx(rf.distance_3d(g.d2d, 10.0, 1.5), rel=1e-9)


class TestReceivedPower:
    def test_boresight_link_at_100m(self):
        p = rf.received_power(30, 109.963, 39.082, 0, 17)
        assert p == pytest.approx(-23.881, abs=1e-3)

    def test_back_lobe_link_at_100m(self):
        assert rf.received_power(30, 109.963, 39.082, 30, 17) == pytest.approx(-53.881, abs=1e-3)

    def test_identity(self):
        assert rf.received_power(0, 0, 0, 0, 0) == 0

    @given(*[st.floats(-200, 200)] * 5, st.floats(-10, 10))
    def test_linear_with_signs(self, tx, pl, gt, gl, gr, delta):
        base = rf.received_power(tx, pl, gt, gl, gr)
        for i, sign in enumerate((1, -1, 1, -1, 1)):
            args = [tx, pl, gt, gl, gr]
            args[i] += delta
            assert rf.received_power(*args) == pytest.approx(base + sign * delta, abs=1e-9)


class TestNoise:
    def test_thermal_only(self):
        assert rf.noise_power(2.16e9, 0.0) == pytest.approx(-80.655, abs=1e-3)

    def test_with_noise_figure(self):
        assert rf.noise_power(2.16e9, 1.5) == pytest.approx(-79.155, abs=1e-3)

    def test_one_hertz(self):
        assert rf.noise_power(1.0, 0.0) == -174.0

    @pytest.mark.parametrize("bw", [0.0, -1.0])
    def test_bad_bandwidth(self, bw):
        with pytest.raises(ValueError):
            rf.noise_power(bw, 0.0)


class TestConversions:
    def test_values(self):
        assert rf.db_to_linear(0.0) == 1.0
        assert rf.db_to_linear(30.0) == pytest.approx(1000.0, rel=1e-15)
        assert rf.mw_to_dbm(1.0) == 0.0

    def test_round_trip(self):
        x = np.random.default_rng(0).uniform(-200, 200, 10_000)
        np.testing.assert_allclose(rf.linear_to_db(rf.db_to_linear(x)), x, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_non_positive_rejected(self, bad):
        with pytest.raises(ValueError):
            rf.linear_to_db(bad)
