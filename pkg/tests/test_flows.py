import math

import numpy as np
import pytest
import sympy as sp

from leafwise.flows import (
    PARAM_AXIS,
    ContactFamily,
    cloud_differential,
    gray_field,
    gray_flow,
    integrate_flow,
    kernel_basis,
    mapping_torus_lift,
    offset_cloud,
    parallel_transport,
    subspace_defect,
    time_grid,
)
from leafwise.forms import Chart, DifferentialForm, ScalarField, VectorField
from leafwise.models import (
    mapping_torus_leaf,
    mapping_torus_model,
    reparametrized_t4_family,
    rotating_t4_family,
    standard_local_model,
    t4_model,
    torus_chart,
)
from leafwise.tolerances import DEFAULT_TOLERANCES

FD = DEFAULT_TOLERANCES.fd
TWO_PI = 2 * math.pi


class TestIntegration:
    def test_time_grid(self):
        g = time_grid(0.25, 0.1)
        np.testing.assert_allclose(g, [0.0, 0.1, 0.2, 0.25])
        assert len(time_grid(1.0, 0.25)) == 5
        with pytest.raises(ValueError):
            time_grid(1.0, 0.0)

    def test_periodic_return(self):
        chart = torus_chart()
        p0 = np.array([0.3, 0.1, 0.2, 0.4])
        traj = integrate_flow(chart.partial("t"), p0, 1.0, step=1e-2)
        assert np.max(np.abs(chart.displacement(traj.end, p0))) < 1e-10
        assert not traj.exited

    def test_straight_line(self):
        chart = torus_chart()
        p0 = np.array([0.3, 0.1, 0.2, 0.4])
        traj = integrate_flow(chart.partial("t", -1.0), p0, 0.2, step=1e-2)
        expected = chart.wrap(p0 - np.outer(traj.times, [1, 0, 0, 0]))
        np.testing.assert_allclose(traj.points, expected, atol=1e-12)

    def test_rotation_is_fourth_order(self):
        chart = Chart.from_axes(x=(-2.0, 2.0), y=(-2.0, 2.0))
        X = VectorField.from_function(chart, lambda p: np.stack([-p[..., 1], p[..., 0]], axis=-1))
        p0 = np.array([1.0, 0.0])
        errs = [np.linalg.norm(integrate_flow(X, p0, TWO_PI, step=TWO_PI / n).end - p0) for n in (40, 80)]
        assert 8 <= errs[0] / errs[1] <= 32

    def test_exit_flag(self):
        chart = Chart.from_axes(x=(0.0, 1.0))
        traj = integrate_flow(chart.partial("x"), [0.5], 1.0, step=0.1)
        assert traj.exited and traj.end_time < 1.0


class TestKernels:
    def test_cloud_differential_of_linear_map(self, rng):
        chart = Chart.from_axes(x=(-5.0, 5.0), y=(-5.0, 5.0), z=(-5.0, 5.0))
        M = rng.normal(size=(3, 3))
        cloud = offset_cloud(np.array([0.1, 0.2, 0.3]), 1e-3)
        np.testing.assert_allclose(cloud_differential(chart, cloud @ M.T, 1e-3), M, atol=1e-10)

    def test_subspace_defect(self):
        e = np.eye(3)
        assert subspace_defect(e[:, :2], e[:, :2]) == pytest.approx(0.0, abs=1e-15)
        tilted = np.stack([e[:, 0], math.cos(0.3) * e[:, 1] + math.sin(0.3) * e[:, 2]], axis=-1)
        assert subspace_defect(tilted, e[:, :2]) == pytest.approx(math.sin(0.3), abs=1e-12)
        basis = kernel_basis(np.array([[0.0, 0.0, 1.0]]))
        assert basis.shape == (3, 2) and np.abs(basis[2]).max() < 1e-15


class TestTransport:
    def test_local_model(self):
        pair = standard_local_model()
        _, report = parallel_transport(pair, [0.1, 0.2, 0.5, 1.0], 0.5, step=1e-2)
        assert report.max_defect < 1e-8 and report.to_check().passed

    def test_t4(self):
        _, report = parallel_transport(t4_model(1.0, 0.5, 0.25), [0.9, 0.2, -0.1, 0.3], 0.5, step=1e-2)
        assert report.max_defect < FD

    def test_mapping_torus_follows_lift(self):
        pair = mapping_torus_model()
        p0 = np.array([0.1, 0.2, -0.1, 0.3])
        traj, report = parallel_transport(pair, p0, 0.5, step=1e-2)
        assert report.max_defect < FD
        lift = mapping_torus_lift(mapping_torus_leaf(), _leaf_hamiltonian())
        oracle = integrate_flow(lift, p0[1:], 0.5, step=1e-2)
        np.testing.assert_allclose(traj.end[1:], oracle.end, atol=1e-10)
        assert traj.end[0] == pytest.approx(0.6, abs=1e-12)

    def test_offset_refinement(self):
        pair = mapping_torus_model()
        p0 = [0.1, 0.2, -0.1, 0.3]
        coarse = parallel_transport(pair, p0, 0.5, step=1e-2, fd_offset=1e-3)[1].max_defect
        fine = parallel_transport(pair, p0, 0.5, step=1e-2, fd_offset=1e-4)[1].max_defect
        assert coarse >= 5 * fine


def _leaf_hamiltonian():
    x, y, z = mapping_torus_leaf().chart.symbols()
    return ScalarField.symbolic((x**2 + y**2 + z**2) / 2, (x, y, z))


class TestGray:
    SEEDS = [[0.1, 0.2, 0.3, 0.4], [0.5, 0.5, 0.5, 0.15]]

    def test_constant_family_stays_put(self):
        fam = ContactFamily.constant(t4_model(1.0, 0.5, 0.25))
        rep = gray_flow(fam, self.SEEDS, step=0.05)
        for state in rep.states:
            np.testing.assert_allclose(state.trajectory.points, np.broadcast_to(state.seed, state.trajectory.points.shape), atol=1e-14)
            assert state.g == pytest.approx(1.0, abs=1e-14)
        # Dφ is the identity up to rounding divided by the offset
        assert rep.max_defect < 1e-10

    def test_rotating_tangency(self):
        fam = rotating_t4_family(0.5, 0.25, 0.3)
        pts = torus_chart().grid(5)
        for s in (0.0, 0.37, 1.0):
            X, lam, tang = gray_field(fam, s, pts)
            assert tang.max() < 1e-12
            np.testing.assert_allclose(X, np.broadcast_to([-0.3, 0, 0, -1], X.shape), atol=1e-12)

    def test_rotating_endpoint(self):
        rep = gray_flow(rotating_t4_family(), self.SEEDS, step=1e-2)
        assert rep.to_check().passed
        for state in rep.states:
            # the flow is z -> z - s
            np.testing.assert_allclose(torus_chart().displacement(state.trajectory.end, state.seed), 0, atol=1e-12)

    def test_conformal_family_oracle(self):
        # alpha_s = e^{cs} alpha_0: the field vanishes and g = e^{cs}
        c = 0.7
        chart = torus_chart()
        z = chart.symbols()[3]
        s = sp.Symbol(PARAM_AXIS, real=True)
        beta = DifferentialForm(chart, 1, {(0,): -1.0})
        fam = ContactFamily.from_expressions(
            chart, beta, {(1,): sp.exp(c * s) * sp.sin(2 * sp.pi * z), (2,): sp.exp(c * s) * sp.cos(2 * sp.pi * z)}
        )
        rep = gray_flow(fam, self.SEEDS, step=0.05)
        for state in rep.states:
            assert state.g == pytest.approx(math.exp(c), rel=1e-6)
            np.testing.assert_allclose(state.lam_history, c, atol=1e-12)
        assert rep.max_defect < 1e-10 and rep.max_conformal_residual < 1e-6

    def test_reparametrized_convergence(self):
        fam = reparametrized_t4_family()
        defects = [gray_flow(fam, self.SEEDS, step=h, certify=False).max_defect for h in (0.1, 0.05, 0.025)]
        assert defects[0] > defects[1] > defects[2]
        assert defects[0] / defects[1] > 8 and defects[1] / defects[2] > 8
        assert defects[2] < 1e-8

    def test_g_positive_and_conformal(self):
        rep = gray_flow(reparametrized_t4_family(), self.SEEDS, step=0.025, certify=False)
        for state in rep.states:
            assert state.g > 0 and np.all(np.isfinite(state.log_g))
        assert rep.max_conformal_residual < FD
        assert rep.max_beta_x < 1e-12 and rep.max_alpha_x < 1e-12


class TestMappingTorusLift:
    @pytest.mark.parametrize("H", [0.0, 1.0])
    def test_constant_hamiltonian(self, H):
        leaf = mapping_torus_leaf()
        pts = leaf.chart.grid(5)
        X = mapping_torus_lift(leaf, H)(pts)
        # constant H gives H times the Reeb field ∂z
        np.testing.assert_allclose(X, np.broadcast_to([0.0, 0.0, H], X.shape), atol=1e-12)

    def test_quadratic_hamiltonian(self):
        leaf = mapping_torus_leaf()
        pts = leaf.chart.grid(5)
        X = mapping_torus_lift(leaf, _leaf_hamiltonian())(pts)
        x, y, z = pts.T
        H = (x**2 + y**2 + z**2) / 2
        np.testing.assert_allclose(X, np.stack([x * z - y, x, H - x**2], axis=-1), atol=1e-12)
        alpha = leaf.alpha.coefficients(pts)
        np.testing.assert_allclose(np.einsum("ni,ni->n", alpha, X), H, atol=1e-12)
