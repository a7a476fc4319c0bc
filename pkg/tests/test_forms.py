import math

import numpy as np
import pytest
import sympy as sp

from leafwise.errors import ChartMismatchError, DegreeError, DomainError
from leafwise.forms import (
    Chart,
    ChartMap,
    DifferentialForm,
    ScalarField,
    VectorField,
    evaluate,
    exterior_derivative,
    interior_product,
    lie_derivative,
    pullback,
    wedge,
    where,
)
from leafwise.models import divisor_chart, local_chart, torus_chart
from leafwise.tolerances import Tier

TWO_PI = 2 * math.pi


@pytest.fixture
def t4():
    chart = torus_chart()
    t, x, y, z = chart.symbols()
    alpha = DifferentialForm.from_expressions(chart, 1, {(1,): sp.sin(2 * sp.pi * z), (2,): sp.cos(2 * sp.pi * z)})
    return chart, alpha


@pytest.fixture
def tube():
    chart = Chart.from_axes(z=(-1.0, 1.0), r=(1e-6, 1.0), theta=TWO_PI)
    z, r, th = chart.symbols()
    return chart, DifferentialForm.from_expressions(chart, 1, {(0,): 1, (2,): r**2})


class TestChart:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Chart.from_axes(x=0.0)
        with pytest.raises(ValueError):
            Chart.from_axes(x=(1.0, 1.0))
        with pytest.raises(ValueError):
            Chart.from_axes(a=1.0, b=1.0, c=1.0, d=1.0, e=1.0, f=1.0, g=1.0)
        with pytest.raises(ValueError):
            Chart(("x", "x"), (1.0, 1.0), (None, None))

    def test_grid_and_wrap(self):
        chart = Chart.from_axes(t=(0.0, 1.0), theta=TWO_PI)
        g = chart.grid(5)
        assert g.shape == (25, 2)
        assert g[:, 1].max() < TWO_PI  # periodic axes exclude the duplicate endpoint
        assert chart.wrap(np.array([0.5, 7.0]))[1] == pytest.approx(7.0 - TWO_PI)
        assert not chart.contains(np.array([1.5, 0.0]))
        with pytest.raises(DomainError):
            chart.require(np.array([1.5, 0.0]))

    def test_interior_grid_avoids_boundary(self):
        g = Chart.from_axes(t=(0.0, 1.0)).grid(4, interior=True)
        assert g.min() > 0 and g.max() < 1


class TestScalarField:
    def test_exact_partials_agree_with_fd(self, rng):
        chart = torus_chart()
        f = ScalarField.symbolic(sp.sin(2 * sp.pi * chart.symbols()[3]) * chart.symbols()[1] ** 2, chart.symbols())
        opaque = ScalarField(lambda p: f(p))
        pts = rng.uniform(0, 1, (20, 4))
        for i in range(4):
            np.testing.assert_allclose(f.partial(i)(pts), opaque.partial(i)(pts), atol=1e-4)
        assert f.partial(0).tier is Tier.EXACT and opaque.partial(0).tier is Tier.FD

    def test_where_switches_branchwise(self):
        inside = ScalarField.constant(1.0)
        outside = ScalarField.coordinate(0)
        f = where(lambda p: p[..., 0] < 0.5, inside, outside)
        np.testing.assert_array_equal(f(np.array([[0.1], [0.9]])), [1.0, 0.9])
        np.testing.assert_array_equal(f.partial(0)(np.array([[0.1], [0.9]])), [0.0, 1.0])


class TestWedge:
    def test_dz_wedge_r2_dtheta(self, tube):
        chart, _ = tube
        r = chart.symbols()[1]
        out = wedge(chart.d("z"), DifferentialForm.from_expressions(chart, 1, {(2,): r**2}))
        assert out.degree == 2 and set(out.components) == {(0, 2)}
        assert out.component((0, 2))(np.array([0.0, 0.7, 1.0])) == pytest.approx(0.49)

    def test_t4_contact_volume_is_two_pi(self, t4):
        chart, alpha = t4
        p, q, r = 1.0, math.sqrt(2), math.sqrt(3)
        beta = p * chart.d("x") + q * chart.d("y") + r * chart.d("z") - chart.d("t")
        dalpha = exterior_derivative(alpha)
        vol = wedge(wedge(alpha, dalpha), beta)
        frame = np.eye(4)
        for pt in chart.grid(5):
            assert evaluate(vol, pt, frame) == pytest.approx(TWO_PI, abs=1e-12)

    def test_errors(self, t4, tube):
        chart, alpha = t4
        with pytest.raises(ChartMismatchError):
            wedge(alpha, tube[1])
        with pytest.raises(DegreeError):
            wedge(chart.volume_form(), alpha)


class TestExteriorDerivative:
    def test_tube_form(self, tube):
        chart, alpha = tube
        d = exterior_derivative(alpha)
        assert set(d.components) == {(1, 2)}
        assert d.component((1, 2))(np.array([0.0, 0.3, 0.0])) == pytest.approx(0.6, abs=1e-15)
        assert d.tier is Tier.EXACT

    def test_t4_form(self, t4):
        chart, alpha = t4
        d = exterior_derivative(alpha)
        pts = chart.grid(5)
        z = pts[:, 3]
        # components on (x,z) and (y,z): dz∧dx = -dx∧dz
        np.testing.assert_allclose(d.component((1, 3))(pts), -TWO_PI * np.cos(TWO_PI * z), atol=1e-12)
        np.testing.assert_allclose(d.component((2, 3))(pts), TWO_PI * np.sin(TWO_PI * z), atol=1e-12)

    def test_dd_vanishes_fd(self):
        chart = Chart.from_axes(x=1.0, y=1.0)
        f = ScalarField(lambda p: np.sin(TWO_PI * p[..., 0]) * np.cos(TWO_PI * p[..., 1]))
        dd = exterior_derivative(exterior_derivative(DifferentialForm.scalar(chart, f)))
        assert dd.tier is Tier.FD
        assert dd.max_abs(chart.grid(9)) < 1e-4

    def test_top_degree_gives_zero(self, tube):
        chart, _ = tube
        out = exterior_derivative(chart.volume_form())
        assert out.degree == 4 and not out.components


class TestInteriorAndLie:
    def test_interior_examples(self, tube, t4):
        chart, alpha = tube
        one = interior_product(chart.partial("z"), alpha)
        assert one.degree == 0 and one.component(())(np.array([0.0, 0.5, 0.0])) == 1.0
        tchart, talpha = t4
        assert not interior_product(tchart.partial("t"), exterior_derivative(talpha)).components

    def test_lie_examples(self, t4):
        chart, alpha = t4
        tube_chart = local_chart()
        r = tube_chart.symbols()[2]
        tube_alpha = DifferentialForm.from_expressions(tube_chart, 1, {(1,): 1, (3,): r**2})
        assert lie_derivative(tube_chart.partial("t"), tube_alpha).max_abs(tube_chart.grid(5)) == 0.0
        assert lie_derivative(chart.partial("t", -1.0), alpha).max_abs(chart.grid(5)) == 0.0

    def test_lie_matches_translation_oracle(self, t4):
        chart, alpha = t4
        X = chart.partial("z")
        h = 1e-4
        shift = lambda s: ChartMap.from_expressions(chart, chart, [*chart.symbols()[:3], chart.symbols()[3] + s])  # noqa: E731
        pts = chart.grid(5)
        oracle = (pullback(shift(h), alpha).coefficients(pts) - pullback(shift(-h), alpha).coefficients(pts)) / (2 * h)
        np.testing.assert_allclose(lie_derivative(X, alpha).coefficients(pts), oracle, atol=1e-4)


class TestPullback:
    def test_identity(self, t4):
        chart, alpha = t4
        pts = chart.grid(4)
        out = pullback(ChartMap.identity(chart), exterior_derivative(alpha))
        np.testing.assert_array_equal(out.coefficients(pts), exterior_derivative(alpha).coefficients(pts))

    def test_square_root_gluing_map(self):
        side = divisor_chart(0.5)
        glue = Chart.from_axes(s=1.0, w=1.0, t=(1e-3, 0.25), theta=TWO_PI)
        s, w, t, th = glue.symbols()
        F0 = ChartMap.from_expressions(glue, side, [s, w, sp.sqrt(t), th])
        r = side.symbols()[2]
        pulled = pullback(F0, DifferentialForm.from_expressions(side, 1, {(3,): r**2}))
        pts = glue.grid(5)
        np.testing.assert_allclose(pulled.component((3,))(pts), pts[:, 2], rtol=0, atol=1e-15)
        assert set(pulled.components) == {(3,)}

    def test_domain_and_chart_errors(self, t4):
        chart, alpha = t4
        small = Chart.from_axes(a=(0.0, 1.0))
        m = ChartMap.from_expressions(small, Chart.from_axes(b=(0.0, 1.0)), [small.symbols()[0] + 2])
        with pytest.raises(DomainError):
            pullback(m, m.target.d("b"), validate_on=small.grid(3))
        with pytest.raises(ChartMismatchError):
            pullback(m, alpha)


class TestEvaluate:
    def test_examples(self, tube):
        chart, alpha = tube
        p = np.array([0.0, 0.5, 1.0])
        f = DifferentialForm.scalar(chart, ScalarField.coordinate(1))
        assert evaluate(f, p) == 0.5
        assert evaluate(chart.d("z"), p, [[1.0, 0.0, 0.0]]) == 1.0
        da = exterior_derivative(alpha)
        v, w = np.array([0.1, 0.7, -0.3]), np.array([1.0, -0.2, 0.4])
        assert evaluate(da, p, [v, w]) == pytest.approx(-evaluate(da, p, [w, v]), abs=1e-15)

    def test_out_of_domain(self, tube):
        chart, alpha = tube
        with pytest.raises(DomainError):
            evaluate(alpha, np.array([5.0, 0.5, 0.0]), [[1.0, 0.0, 0.0]])

    def test_vector_field_algebra(self, tube):
        chart, _ = tube
        X = chart.partial("z") + 2.0 * chart.partial("r")
        np.testing.assert_array_equal(X(np.zeros(3)), [1.0, 2.0, 0.0])
        np.testing.assert_array_equal(VectorField.constant(chart, [0, 0, 1])(np.zeros((2, 3))), [[0, 0, 1]] * 2)
