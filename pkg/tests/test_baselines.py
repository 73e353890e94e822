import numpy as np
import pytest

import dualprecon as dp


def _half_square(dim):
    return dp.Objective(
        dim=dim,
        value=lambda x: 0.5 * float(np.dot(x, x)),
        gradient=lambda x: x,
    )


class TestGdStep:
    def test_quadratic_one_step(self):
        x1 = dp.gd_step(_half_square(2), np.array([3.0, 4.0]), 1.0)
        assert np.array_equal(x1, np.zeros(2))

    def test_quartic_overshoot(self):
        # plain GD with L=1 overshoots hard on the quartic
        f, _ = dp.power1d_problem(b=0.0, p=4.0)
        # f here is x^4/4 so grad(2) = 8 and the step lands at -6
        x1 = dp.gd_step(f, np.array([2.0]), 1.0)
        assert x1[0] == -6.0

    def test_fixed_point(self):
        x = np.array([0.0, 0.0])
        assert np.array_equal(dp.gd_step(_half_square(2), x, 1.0), x)

    def test_domain_check(self):
        f = dp.Objective(
            dim=1,
            value=lambda x: float(x[0]),
            gradient=lambda x: np.ones(1),
            in_domain=lambda x: bool(x[0] > 0),
        )
        with pytest.raises(dp.DomainError):
            dp.gd_step(f, np.array([-1.0]), 1.0)


class TestBregmanStep:
    def test_euclidean_reduces_to_gd_bitwise(self):
        f = _half_square(3)
        h = dp.euclidean_mirror_map()
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(3)
            L = float(2.0 ** rng.integers(-3, 4))
            assert np.array_equal(dp.bregman_step(f, h, x, L), dp.gd_step(f, x, L))

    def test_matched_mirror_map_one_step(self):
        f, _ = dp.power1d_problem(b=1.0, p=4.0)
        h = dp.shifted_power_mirror_map(np.array([1.0]), 4.0)
        x1 = dp.bregman_step(f, h, np.array([3.0]), 1.0)
        assert x1[0] == pytest.approx(1.0, abs=1e-12)

    def test_power_map_hand_value(self):
        # grad_h(2) = 8, 8 - grad_f(2) = 6, inverse map gives 6^(1/3)
        f = _half_square(1)
        h = dp.shifted_power_mirror_map(np.array([0.0]), 4.0)
        x1 = dp.bregman_step(f, h, np.array([2.0]), 1.0)
        assert x1[0] == pytest.approx(6.0 ** (1.0 / 3.0), rel=1e-14)


class TestMirrorMaps:
    def test_gradient_inversion_roundtrip(self):
        h = dp.shifted_power_mirror_map(np.array([1.0, -2.0]), 4.0)
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.standard_normal(2) * 10.0 ** rng.uniform(-2, 2)
            back = h.conjugate_gradient(h.gradient(x))
            assert np.allclose(back, x, rtol=1e-10, atol=1e-12)

    def test_center_is_fixed_point_of_inverse(self):
        c = np.array([2.0, 3.0])
        h = dp.shifted_power_mirror_map(c, 4.0)
        assert np.array_equal(h.conjugate_gradient(np.zeros(2)), c)

    def test_rejects_p_below_two(self):
        with pytest.raises(ValueError):
            dp.shifted_power_mirror_map(np.zeros(2), 1.5)
