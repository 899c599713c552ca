import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from stream_verify.benchmarks import (BenchmarkConfig, grisvard_benchmark, grisvard_exponent, grisvard_solution,
                                      grisvard_source, square_poly_parts, square_poly_solution, square_poly_source)
from stream_verify.errors import SingularPointError

# t^2 (1 - t)^2
P = Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])
D = [P.deriv(k) if k else P for k in range(5)]

GRID = np.linspace(0.05, 0.95, 7)
XS, YS = np.meshgrid(GRID, GRID)


def _square(k, l, x, y):
    return D[k](x) * D[l](y)


class TestSquarePoly:
    def test_solution_matches_the_product_polynomial(self):
        sol = square_poly_solution(10.0)
        np.testing.assert_allclose(sol.value(XS, YS), 10.0 * _square(0, 0, XS, YS), atol=1e-15)
        ux, uy = sol.gradient(XS, YS)
        np.testing.assert_allclose(ux, 10.0 * _square(1, 0, XS, YS), atol=1e-14)
        np.testing.assert_allclose(uy, 10.0 * _square(0, 1, XS, YS), atol=1e-14)
        uxx, uxy, uyy = sol.hessian(XS, YS)
        np.testing.assert_allclose(uxx, 10.0 * _square(2, 0, XS, YS), atol=1e-13)
        np.testing.assert_allclose(uxy, 10.0 * _square(1, 1, XS, YS), atol=1e-13)
        np.testing.assert_allclose(uyy, 10.0 * _square(0, 2, XS, YS), atol=1e-13)

    def test_clamped_on_the_boundary(self):
        sol = square_poly_solution(1.0)
        t = np.linspace(0.0, 1.0, 11)
        for x, y in ((t, 0 * t), (t, 0 * t + 1.0), (0 * t, t), (0 * t + 1.0, t)):
            assert np.allclose(sol.value(x, y), 0.0, atol=1e-13)
            assert np.allclose(sol.gradient(x, y), 0.0, atol=1e-13)

    def test_linear_part_is_the_bilaplacian(self):
        linear, _ = square_poly_parts()
        expected = _square(4, 0, XS, YS) + 2.0 * _square(2, 2, XS, YS) + _square(0, 4, XS, YS)
        np.testing.assert_allclose(linear(XS, YS), expected, rtol=1e-10, atol=1e-10)

    def test_quadratic_part_is_the_convection(self):
        _, quadratic = square_poly_parts()
        lap_x = _square(3, 0, XS, YS) + _square(1, 2, XS, YS)
        lap_y = _square(2, 1, XS, YS) + _square(0, 3, XS, YS)
        ux, uy = _square(1, 0, XS, YS), _square(0, 1, XS, YS)
        np.testing.assert_allclose(quadratic(XS, YS), -(lap_x * uy - lap_y * ux), rtol=1e-10, atol=1e-11)

    def test_source_is_quadratic_in_lambda(self):
        _, quadratic = square_poly_parts()
        f1, f10 = square_poly_source(1.0).f(XS, YS), square_poly_source(10.0).f(XS, YS)
        np.testing.assert_allclose(f10 - 10.0 * f1, 90.0 * quadratic(XS, YS), rtol=1e-10, atol=1e-10)

    def test_source_is_a_degree_12_polynomial(self):
        assert square_poly_source(100.0).degree == 12

    @pytest.mark.parametrize('lam', [0.0, -1.0])
    def test_lambda_must_be_positive(self, lam):
        with pytest.raises(ValueError):
            square_poly_source(lam)


class TestGrisvard:
    def test_exponent(self):
        assert grisvard_exponent() == pytest.approx(0.5444837, abs=1e-6)
        z = grisvard_exponent()
        assert math.sin(1.5 * math.pi * z) ** 2 == pytest.approx(z ** 2, abs=1e-13)

    @pytest.mark.parametrize('edge', [
        'x=-1', 'x=1', 'y=-1', 'y=1', 'positive x axis', 'positive y axis'])
    def test_clamped_on_the_boundary(self, edge):
        t = np.linspace(0.1, 0.9, 5)
        points = {
            'x=-1': (-np.ones_like(t), 2 * t - 1),
            'x=1': (np.ones_like(t), -t),
            'y=-1': (2 * t - 1, -np.ones_like(t)),
            'y=1': (-t, np.ones_like(t)),
            'positive x axis': (t, np.zeros_like(t)),
            'positive y axis': (np.zeros_like(t), t),
        }[edge]
        sol = grisvard_solution()
        np.testing.assert_allclose(sol.value(*points), 0.0, atol=1e-8)
        ux, uy = sol.gradient(*points)
        np.testing.assert_allclose(ux, 0.0, atol=1e-8)
        np.testing.assert_allclose(uy, 0.0, atol=1e-8)

    def test_singular_corner_raises(self):
        sol = grisvard_solution()
        with pytest.raises(SingularPointError):
            sol.value(0.0, 0.0)
        with pytest.raises(SingularPointError):
            sol.hessian(np.array([-0.5, 0.0]), np.array([0.5, 0.0]))

    def test_corner_growth_along_a_ray(self):
        value = grisvard_solution().value
        u1, u2 = value(-1e-4, 0.0), value(-1e-3, 0.0)
        assert abs(u1) > 0.0
        slope = math.log(abs(u2 / u1)) / math.log(10.0)
        assert slope == pytest.approx(1.0 + grisvard_exponent(), abs=1e-4)

    @pytest.mark.parametrize('point', [(-0.5, 0.3), (-0.4, -0.6), (0.3, -0.45)])
    def test_hessian_is_the_gradient_derivative(self, point):
        sol = grisvard_solution()
        x, y = point
        h = 1e-6
        uxx, uxy, uyy = sol.hessian(x, y)
        ux_p, uy_p = sol.gradient(x + h, y)
        ux_m, uy_m = sol.gradient(x - h, y)
        assert uxx == pytest.approx((ux_p - ux_m) / (2 * h), rel=1e-5, abs=1e-6)
        assert uxy == pytest.approx((uy_p - uy_m) / (2 * h), rel=1e-5, abs=1e-6)
        ux_p, uy_p = sol.gradient(x, y + h)
        ux_m, uy_m = sol.gradient(x, y - h)
        assert uyy == pytest.approx((uy_p - uy_m) / (2 * h), rel=1e-5, abs=1e-6)

    def test_source_is_finite_away_from_the_corner(self):
        source = grisvard_source()
        values = source.f(np.array([-0.5, -0.5, 0.5]), np.array([0.5, -0.5, -0.5]))
        assert np.all(np.isfinite(values))
        assert source.degree is None and source.singular_point == (0.0, 0.0)

    def test_benchmark(self):
        benchmark = grisvard_benchmark()
        assert benchmark.domain == 'l_shape'
        assert benchmark.sigma_reg == pytest.approx(grisvard_exponent())


class TestBenchmarkConfig:
    @pytest.mark.parametrize('kwargs', [
        {'benchmark': 'cube'},
        {'lam': 2.0},
        {'theta': 0.0},
        {'theta': 1.0},
        {'max_ndof': 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            BenchmarkConfig(**kwargs)

    def test_l_shape_ignores_lambda(self):
        config = BenchmarkConfig(benchmark='lshape-grisvard', lam=2.0)
        assert config.run_name == 'lshape-grisvard_uniform'

    def test_run_name(self):
        assert BenchmarkConfig(lam=10.0, strategy='adaptive').run_name == 'square-poly_lambda10_adaptive'

    def test_build(self, tmp_path):
        config = BenchmarkConfig(lam=100.0, output_dir=str(tmp_path))
        assert config.output_dir == tmp_path
        benchmark = config.build()
        assert benchmark.name == 'square-poly' and benchmark.lam == 100.0
