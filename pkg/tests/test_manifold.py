import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrcf import manifold
from hrcf.errors import ConstraintError


def random_tangent_spatial(rng, n, max_norm=10.0, size=None):
    shape = (size, n) if size else (n,)
    direction = rng.standard_normal(shape)
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    radius = rng.uniform(0.0, max_norm, size=shape[:-1] + (1,))
    return direction * radius


class TestLorentzInner:
    def test_origin_self_inner(self):
        o = manifold.origin(2)
        assert manifold.lorentz_inner(o, o) == -1.0

    def test_orthogonal_tangents(self):
        assert manifold.lorentz_inner(np.array([0.0, 1, 0]), np.array([0.0, 0, 1])) == 0.0

    def test_hand_evaluated(self):
        # -2*3 + 1*1 + 1*2
        assert manifold.lorentz_inner(np.array([2.0, 1, 1]), np.array([3.0, 1, 2])) == -3.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            manifold.lorentz_inner(np.zeros(3), np.zeros(4))

    def test_too_short(self):
        with pytest.raises(ValueError):
            manifold.lorentz_inner(np.zeros(1), np.zeros(1))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bilinear_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        x, y, z = rng.standard_normal((3, 5))
        a, b = rng.standard_normal(2)
        left = manifold.lorentz_inner(a * x + b * y, z)
        assert left == pytest.approx(
            a * manifold.lorentz_inner(x, z) + b * manifold.lorentz_inner(y, z), abs=1e-12
        )
        assert manifold.lorentz_inner(x, y) == pytest.approx(manifold.lorentz_inner(y, x))


class TestExpOrigin:
    def test_zero_maps_to_origin_exactly(self):
        out = manifold.exp_origin(np.zeros(4))
        np.testing.assert_array_equal(out, manifold.origin(3))

    def test_closed_form_along_axis(self):
        out = manifold.exp_origin(np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(out, [np.cosh(1.0), np.sinh(1.0), 0.0], rtol=1e-15)
        np.testing.assert_allclose(out[:2], [1.5430806348152437, 1.1752011936438014])

    def test_nonzero_time_coordinate_rejected(self):
        with pytest.raises(ConstraintError):
            manifold.exp_origin(np.array([1e-9, 1.0, 0.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            manifold.exp_origin(np.array([0.0, np.nan, 0.0]))

    def test_random_outputs_on_sheet(self):
        rng = np.random.default_rng(0)
        for n in (2, 8, 50):
            v = random_tangent_spatial(rng, n, size=2000)
            points = manifold.exp_origin_spatial(v)
            assert manifold.sheet_deviation(points).max() <= 1e-6
            assert (points[:, 0] > 0).all()


class TestLogOrigin:
    def test_log_of_origin_is_zero(self):
        np.testing.assert_array_equal(manifold.log_origin(manifold.origin(4)), np.zeros(5))

    def test_inverts_exp_closed_form(self):
        x = np.array([np.cosh(2.0), np.sinh(2.0), 0.0])
        np.testing.assert_allclose(manifold.log_origin(x), [0.0, 2.0, 0.0], atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for n in (2, 8, 50):
            spatial = random_tangent_spatial(rng, n, size=2000)
            v = manifold.tangent_from_spatial(spatial)
            back = manifold.log_origin(manifold.exp_origin(v))
            scale = np.maximum(1.0, np.linalg.norm(v, axis=1))
            assert (np.linalg.norm(back - v, axis=1) / scale).max() <= 1e-8

    def test_first_coordinate_exactly_zero(self):
        rng = np.random.default_rng(2)
        points = manifold.exp_origin_spatial(random_tangent_spatial(rng, 6, size=500))
        assert (manifold.log_origin(points)[:, 0] == 0.0).all()

    def test_off_sheet_rejected(self):
        with pytest.raises(ConstraintError):
            manifold.log_origin(np.array([1.1, 0.0, 0.0]))
        with pytest.raises(ConstraintError):
            manifold.log_origin(np.array([-1.0, 0.0, 0.0]))

    def test_magnitude_is_distance_to_origin(self):
        v = np.array([0.0, 3.0, 4.0])
        x = manifold.exp_origin(v)
        d = manifold.geodesic_distance(x, manifold.origin(2))
        assert np.linalg.norm(manifold.log_origin(x)) == pytest.approx(d, rel=1e-12)


class TestGeodesicDistance:
    def test_identical_points(self):
        o = manifold.origin(3)
        assert manifold.geodesic_distance(o, o) == 0.0

    def test_distance_to_origin_equals_tangent_norm(self):
        for r in (0.25, 1.0, 5.0, 10.0):
            x = manifold.exp_origin(np.array([0.0, r, 0.0]))
            d = manifold.geodesic_distance(manifold.origin(2), x)
            assert d == pytest.approx(r, rel=1e-12)

    def test_symmetry_and_positivity(self):
        rng = np.random.default_rng(3)
        x = manifold.exp_origin_spatial(random_tangent_spatial(rng, 5, size=200))
        y = manifold.exp_origin_spatial(random_tangent_spatial(rng, 5, size=200))
        dxy = manifold.geodesic_distance(x, y)
        dyx = manifold.geodesic_distance(y, x)
        np.testing.assert_allclose(dxy, dyx, rtol=1e-12)
        assert (dxy >= 0).all()

    def test_clamp_absorbs_roundoff(self):
        x = manifold.exp_origin(np.array([0.0, 1e-9, 0.0]))
        assert np.isfinite(manifold.geodesic_distance(x, x))
        assert manifold.geodesic_distance(x, x) == 0.0


class TestDistanceSqGrads:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        sx = rng.standard_normal(4) * 0.7
        sy = rng.standard_normal(4) * 0.7
        x = manifold.exp_origin_spatial(sx)
        y = manifold.exp_origin_spatial(sy)
        d2, gx, gy = manifold.distance_sq_with_grads(x, y)
        step = 1e-6
        for k in range(5):
            for point, grad, other, first in ((x, gx, y, True), (y, gy, x, False)):
                hi = point.copy()
                hi[k] += step
                lo = point.copy()
                lo[k] -= step
                if first:
                    fd = (manifold.geodesic_distance(hi, other) ** 2
                          - manifold.geodesic_distance(lo, other) ** 2) / (2 * step)
                else:
                    fd = (manifold.geodesic_distance(other, hi) ** 2
                          - manifold.geodesic_distance(other, lo) ** 2) / (2 * step)
                assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_coincident_coefficient_is_finite(self):
        x = manifold.exp_origin(np.array([0.0, 0.5, 0.0]))
        d2, gx, gy = manifold.distance_sq_with_grads(x, x)
        assert d2 == 0.0
        assert np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))


class TestDistanceRatioDiagnostic:
    def test_small_radius_approaches_chord_limit(self):
        # flat-regime limit of the ratio is sin(angle / 2)
        for angle in (np.pi / 4, np.pi / 2):
            ratio = manifold.distance_ratio_diagnostic(1e-4, angle)
            assert ratio == pytest.approx(np.sin(angle / 2), abs=1e-6)
            assert ratio < 1.0

    def test_growing_radius_increases_ratio(self):
        assert manifold.distance_ratio_diagnostic(8.0, np.pi / 2) > manifold.distance_ratio_diagnostic(1.0, np.pi / 2)

    def test_sweep_monotone_and_frozen_values(self):
        values = [manifold.distance_ratio_diagnostic(a, np.pi / 2) for a in range(1, 11)]
        assert all(b > a for a, b in zip(values, values[1:]))
        # frozen oracle values: arcosh(cosh^2 a) / (2a)
        assert values[0] == pytest.approx(0.7566793, abs=1e-6)
        assert values[-1] == pytest.approx(0.9653426, abs=1e-6)

    def test_opposite_directions_give_ratio_one(self):
        for a in (0.5, 2.0, 7.0):
            assert manifold.distance_ratio_diagnostic(a, np.pi) == pytest.approx(1.0, abs=1e-12)

    def test_monotone_for_multiple_angles(self):
        for angle in (np.pi / 4, np.pi / 2, np.pi):
            values = [manifold.distance_ratio_diagnostic(a, angle) for a in range(1, 11)]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_approaches_one_far_from_origin(self):
        assert manifold.distance_ratio_diagnostic(40.0, np.pi / 2) > 0.99

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            manifold.distance_ratio_diagnostic(0.0, np.pi / 2)


class TestTangency:
    def test_spatial_lift_is_tangent_at_origin(self):
        rng = np.random.default_rng(5)
        w = rng.standard_normal((100, 6))
        v = manifold.tangent_from_spatial(w)
        o = manifold.origin(6)
        inner = manifold.lorentz_inner(v, np.broadcast_to(o, v.shape))
        assert np.abs(inner).max() == 0.0
