import math

import numpy as np
import pytest
import sympy as sp

from leafwise.constructions import (
    contactize,
    detect_overtwisted_disk,
    divisor_connected_sum,
    interpolate_to_standard,
    lutz_profile,
    lutz_twist,
    plane_field_path,
    smooth_step,
    symplectize,
    vanishing_lutz_family,
)
from leafwise.errors import CertificationError, DomainError, ModelMismatchError
from leafwise.foliated import (
    FoliatedContactPair,
    solve_reeb_field,
    verify_contact_foliation,
    verify_symplectic_foliation,
)
from leafwise.forms import DifferentialForm, ScalarField
from leafwise.models import (
    divisor_side,
    local_chart,
    overtwisted_model,
    standard_local_model,
    standard_symplectic_foliation,
    t4_model,
)

TWO_PI = 2 * math.pi


def _lam(base, expr_by_axis):
    chart = base.chart
    syms = dict(zip(chart.axis_names, chart.symbols()))
    return DifferentialForm.from_expressions(chart, 1, {(chart.axis(a),): e(syms) for a, e in expr_by_axis.items()})


class TestSmoothStep:
    def test_values_and_monotone(self):
        x = sp.Symbol("x", real=True)
        f = ScalarField.symbolic(smooth_step(x), (x,))
        xs = np.linspace(-0.5, 1.5, 401)[:, None]
        v = f(xs)
        assert np.all(v[xs[:, 0] <= 0] == 0) and np.all(v[xs[:, 0] >= 1] == 1)
        assert np.all(np.diff(v) >= 0)


class TestContactize:
    def test_certifies_with_unit_ratio(self):
        base = standard_symplectic_foliation(1)
        pair = contactize(base, _lam(base, {"y": lambda s: s["x"]}))
        assert pair.certified
        assert pair.certificate.value == pytest.approx(1.0, abs=1e-12)
        assert pair.certificate.details["max_ratio"] == pytest.approx(1.0, abs=1e-12)

    def test_reeb_is_minus_du(self):
        base = standard_symplectic_foliation(1)
        pair = contactize(base, _lam(base, {"y": lambda s: s["x"]}))
        sol = solve_reeb_field(pair, np.array([0.2, 0.0, 0.3, 0.1]))
        np.testing.assert_allclose(sol.vector, [0, 0, 0, -1], atol=1e-12)

    def test_zero_primitive_raises(self):
        base = standard_symplectic_foliation(1)
        with pytest.raises(CertificationError):
            contactize(base, DifferentialForm(base.chart, 1, {}))

    def test_wrong_primitive_raises(self):
        base = standard_symplectic_foliation(1)
        with pytest.raises(ModelMismatchError):
            contactize(base, _lam(base, {"y": lambda s: 2 * s["x"]}))

    def test_four_dimensional_leaves(self):
        base = standard_symplectic_foliation(2)
        lam = _lam(base, {"y1": lambda s: s["x1"], "y2": lambda s: s["x2"]})
        assert verify_contact_foliation(contactize(base, lam)).passed


class TestSymplectize:
    def test_t4(self):
        out = symplectize(t4_model(1.0, 0.5, 0.25))
        assert out.certified and verify_symplectic_foliation(out, grid=7).passed

    def test_round_trip(self):
        base = standard_symplectic_foliation(1)
        pair = contactize(base, _lam(base, {"y": lambda s: s["x"]}))
        out = symplectize(pair, axis="v")
        assert out.chart.dim == 5 and out.certified


class TestLutzProfile:
    def test_check(self):
        prof = lutz_profile(0.8)
        report = prof.check()
        assert report.passed and report.value > 0
        assert report.details["matching_deviation"] == 0.0
        assert report.details["net_twist"] == pytest.approx(TWO_PI, abs=1e-9)

    def test_angles(self):
        R = 0.8
        prof = lutz_profile(R)
        ends = np.array([[0.0], [R]])
        np.testing.assert_allclose(prof.twist_angle(ends), [0.0, TWO_PI], atol=1e-12)
        a = prof.angle(ends)
        assert a[1] - a[0] == pytest.approx(TWO_PI + math.atan(R**2), abs=1e-12)
        assert prof.winding() == pytest.approx(TWO_PI + math.atan(R**2), abs=1e-9)

    def test_matching_zones_are_exact(self):
        prof = lutz_profile(0.8)
        for lo, hi in ((0.0, prof.r0), (prof.r1, prof.R_outer)):
            r = np.linspace(lo, hi, 200)[:, None]
            assert np.all(prof.h1(r) == 1.0)
            assert np.all(prof.h2(r) == r[:, 0] ** 2)

    def test_errors(self):
        with pytest.raises(ValueError):
            lutz_profile(0.0)
        with pytest.raises(ValueError):
            lutz_profile(1.0, eps_match=0.2)


class TestLutzTwist:
    def test_twist_and_locality(self):
        pair = standard_local_model()
        prof = lutz_profile(0.8)
        twisted = lutz_twist(pair, prof)
        assert twisted.certified
        pts = pair.chart.grid(17)
        outside = pts[pts[:, 2] > prof.R_outer]
        np.testing.assert_array_equal(twisted.alpha.coefficients(outside), pair.alpha.coefficients(outside))

    def test_detects_disc(self):
        prof = lutz_profile(0.8)
        twisted = lutz_twist(standard_local_model(), prof)
        r_star = detect_overtwisted_disk(twisted)
        assert prof.r0 < r_star < prof.r1
        h1, h2 = prof.h1(np.array([[r_star]]))[0], prof.h2(np.array([[r_star]]))[0]
        assert math.atan2(h2, h1) % TWO_PI == pytest.approx(math.pi, abs=1e-9)
        assert detect_overtwisted_disk(standard_local_model()) is None

    def test_overtwisted_model(self):
        assert detect_overtwisted_disk(overtwisted_model()) == pytest.approx(math.pi, abs=1e-9)

    def test_errors(self):
        pair = standard_local_model(radius=0.5)
        with pytest.raises(DomainError):
            lutz_twist(pair, lutz_profile(0.8))
        chart = local_chart()
        r = chart.symbols()[2]
        wrong = FoliatedContactPair(
            chart, chart.d("t"), DifferentialForm.from_expressions(chart, 1, {(1,): 1, (3,): 2 * r**2}),
            standard_local_model().orientation_form,
        )
        with pytest.raises(ModelMismatchError):
            lutz_twist(wrong, lutz_profile(0.8))

    def test_non_radial_rejected(self):
        chart = local_chart()
        z, r = chart.symbols()[1:3]
        alpha = DifferentialForm.from_expressions(chart, 1, {(1,): 1, (3,): r**2 + 0.1 * z * r**2})
        with pytest.raises(ModelMismatchError):
            detect_overtwisted_disk(alpha)


@pytest.fixture(scope="module")
def family():
    return vanishing_lutz_family()


class TestVanishingFamily:
    def test_mask(self, family):
        chi = family.chi_values
        assert np.all(family.contact_mask[(chi == 0) | (chi == 1)])
        assert np.all((chi >= 0) & (chi <= 1))

    def test_standard_near_boundary(self, family):
        (_, _), (_, _), (a2, b2) = family.intervals
        chart = family.pair.chart
        std = standard_local_model(t_range=(a2, b2)).alpha
        pts = chart.grid(9)
        for t in (a2, a2 + 0.01, b2 - 0.01, b2):
            pts[:, 0] = t
            np.testing.assert_array_equal(family.pair.alpha.coefficients(pts), DifferentialForm(chart, 1, std.components).coefficients(pts))

    def test_twisted_on_inner_interval(self, family):
        (a0, b0), _, _ = family.intervals
        for t in np.linspace(a0, b0, 5):
            r_star = detect_overtwisted_disk(family.pair, at={"t": float(t)})
            assert r_star is not None and 0 < r_star < 0.8

    def test_nesting_errors(self):
        with pytest.raises(ValueError):
            vanishing_lutz_family(((0.3, 0.7), (0.4, 0.6), (0.1, 0.9)))
        with pytest.raises(ValueError):
            vanishing_lutz_family(((0.4, 0.6), (0.3, 0.7)))
        with pytest.raises(DomainError):
            vanishing_lutz_family(R_outer=1.5)


class TestPlaneFieldPath:
    def test_endpoints_continuity_and_nonvanishing(self):
        prof = lutz_profile(0.8)
        path = plane_field_path(prof)
        chart = local_chart()
        pts = chart.grid(9)
        r = pts[:, 2:3]
        start = path.form(chart, 0.0).coefficients(pts)
        np.testing.assert_allclose(start[:, [1, 3]], np.hstack([np.ones_like(r), r**2]), atol=1e-12)
        end = path.form(chart, 1.0).coefficients(pts)
        inside = r[:, 0] <= prof.R_outer
        np.testing.assert_allclose(end[inside][:, 1], prof.h1(r[inside]), atol=1e-12)
        np.testing.assert_allclose(end[inside][:, 3], prof.h2(r[inside]), atol=1e-12)
        assert np.abs(end[:, 2]).max() < 1e-12
        prev = start
        for s in np.linspace(0.0, 1.0, 201)[1:]:
            cur = path.form(chart, float(s)).coefficients(pts)
            assert np.linalg.norm(cur, axis=-1).min() > 0.5
            assert np.abs(cur - prev).max() < 0.05
            prev = cur
        with pytest.raises(ValueError):
            path.form(chart, 1.5)


class TestInterpolation:
    def test_fixed_point(self):
        chart = local_chart()
        r = chart.symbols()[2]
        f = ScalarField.symbolic(0.3 * r**2, chart.symbols())
        out = interpolate_to_standard(f, 0.3, 1.0)
        pts = chart.grid(9)
        np.testing.assert_allclose(out.field(pts), 0.3 * pts[:, 2] ** 2, atol=1e-12)

    def test_blend_regions(self):
        chart = local_chart()
        r = chart.symbols()[2]
        f = ScalarField.symbolic(r**2, chart.symbols())
        out = interpolate_to_standard(f, 0.4, 1.0)
        assert out.report.passed and out.report.value > 0
        pts = chart.grid(17)
        rr = pts[:, 2]
        core, rim = rr <= 1 / 3, rr >= 2 / 3
        np.testing.assert_array_equal(out.field(pts[core]), 0.4 * rr[core] ** 2)
        np.testing.assert_array_equal(out.field(pts[rim]), rr[rim] ** 2)

    def test_failure_reports_terms(self):
        chart = local_chart()
        r = chart.symbols()[2]
        f = ScalarField.symbolic(0.001 * r**2, chart.symbols())
        with pytest.raises(CertificationError) as err:
            interpolate_to_standard(f, 1.0, 1.0)
        details = err.value.report.details
        assert details["min_cutoff_term"] < 0 < details["min_growth_term"]
        assert err.value.report.witness is not None
        with pytest.raises(ValueError):
            interpolate_to_standard(f, 0.0, 1.0)


class TestGlue:
    def test_default(self):
        glued, report = divisor_connected_sum()
        assert report.passed and report.to_check().passed
        assert max(report.residual_f0, report.residual_f1) < 1e-12
        assert report.min_ratio_off_zero > 0
        assert glued.certified

    def test_side_mismatch(self):
        with pytest.raises(ModelMismatchError):
            divisor_connected_sum(side0=divisor_side(slope=0.5))
        with pytest.raises(ModelMismatchError):
            divisor_connected_sum(side1=divisor_side(epsilon=0.4))
