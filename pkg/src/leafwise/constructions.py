"""Structure-producing constructions.

Contactization and symplectization add one coordinate axis.  Lutz twists
replace ``dz + r^2 dtheta`` near the core of a standard tube by
``h1(r) dz + h2(r) dtheta`` whose coefficient vector turns once more than
the standard one.  The connected sum glues two normal-disc models along a
divisor through the coordinate ``t = ±r^2``.

Every construction that returns a certified object has run the relevant
verifier and embedded its report.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from leafwise.errors import CertificationError, DomainError, ModelMismatchError
from leafwise.forms import (
    Chart,
    ChartMap,
    DifferentialForm,
    ScalarField,
    exterior_derivative,
    pullback,
    wedge,
    where,
)
from leafwise.foliated import (
    FoliatedContactPair,
    LeafContactForm,
    SymplecticFoliationPair,
    _power,
    _top,
    grid_points,
    leaf_orientation,
    verify_contact_foliation,
    verify_radial_bounds,
)
from leafwise.models import divisor_chart, divisor_form, divisor_side, local_chart
from leafwise.reports import CheckReport, witness_of
from leafwise.tolerances import DEFAULT_TOLERANCES, R_MIN, Tier, Tolerances

TWO_PI = 2.0 * math.pi


def _lift(form: DifferentialForm, chart: Chart) -> DifferentialForm:
    """Pull ``form`` back along the projection dropping the trailing axes of ``chart``."""
    base = form.chart
    drop = ChartMap(chart, base, [ScalarField.coordinate(i) for i in range(base.dim)])
    return pullback(drop, form)


def _ensure(obj, grid=None, tol: Tolerances = DEFAULT_TOLERANCES):
    return obj if obj.certified else obj.certify(grid, tol)


def smooth_step(x):
    """``C^∞`` step in a sympy variable: 0 for ``x <= 0``, 1 for ``x >= 1``, increasing between."""
    inner = sp.exp(-1 / x) / (sp.exp(-1 / x) + sp.exp(-1 / (1 - x)))
    return sp.Piecewise((0, x <= 0), (1, x >= 1), (inner, True))


def quintic_step(x):
    """``6x^5 - 15x^4 + 10x^3`` clamped to [0, 1]; ``C^2`` at both ends."""
    return sp.Piecewise((0, x <= 0), (1, x >= 1), (6 * x**5 - 15 * x**4 + 10 * x**3, True))


# ---------------------------------------------------------------------------
# Contactization and symplectization
# ---------------------------------------------------------------------------


def contactize(
    base: SymplecticFoliationPair,
    lam: DifferentialForm,
    axis: str = "u",
    axis_range=(-1.0, 1.0),
    grid=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> FoliatedContactPair:
    """``(base × R, ker(lam - du))`` for an exact leafwise symplectic form ``Omega = d lam``.

    The orientation form is ``(-du) ∧ Omega^n ∧ beta``, for which the
    contact ratio is identically 1.  Raises :class:`CertificationError` if
    the base or the result fails its verifier and :class:`ModelMismatchError`
    if ``d lam`` differs from the base's ``Omega``.
    """
    base = _ensure(base, None, tol)
    if lam.chart != base.chart or lam.degree != 1:
        raise ModelMismatchError("lam must be a 1-form on the base chart", float("inf"))
    chart = base.chart.product(Chart((axis,), (None,), (tuple(axis_range),)))
    du = chart.d(axis)
    alpha = _lift(lam, chart) - du
    beta = _lift(base.beta, chart)
    omega = _lift(base.omega_ext, chart)
    orientation = wedge(wedge(-du, _power(omega, base.n)), beta)
    pair = FoliatedContactPair(chart, beta, alpha, orientation, name=f"contactize({base.name})")
    report = verify_contact_foliation(pair, grid, tol)
    if not report.passed:
        raise CertificationError("contactization is not foliated contact", report)
    pts = grid_points(base.chart, grid)
    mismatch = exterior_derivative(lam, tol.fd_step) - base.omega_ext
    deviation = mismatch.max_abs(pts)
    if deviation > tol.for_tier(mismatch.tier):
        raise ModelMismatchError("d(lam) differs from the base symplectic form", deviation)
    return dataclasses.replace(pair, certificate=report)


def symplectize(
    pair: FoliatedContactPair,
    axis: str = "u",
    axis_range=(-1.0, 1.0),
    grid=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SymplecticFoliationPair:
    """``(V × R, beta, Omega = d(e^u alpha) = e^u (du ∧ alpha + dalpha))``."""
    pair = _ensure(pair, None, tol)
    chart = pair.chart.product(Chart((axis,), (None,), (tuple(axis_range),)))
    u = chart.symbols()[chart.axis(axis)]
    scale = ScalarField.symbolic(sp.exp(u), chart.symbols())
    alpha = _lift(pair.alpha, chart)
    omega = (wedge(chart.d(axis), alpha) + exterior_derivative(alpha)) * scale
    out = SymplecticFoliationPair(chart, _lift(pair.beta, chart), omega, name=f"symplectize({pair.name})")
    return out.certify(grid, tol)


# ---------------------------------------------------------------------------
# Lutz profiles and twists
# ---------------------------------------------------------------------------


_R = sp.Symbol("r", real=True)


@dataclass(frozen=True)
class LutzProfile:
    """Radial pair ``(h1, h2)`` of a full Lutz twist inside ``r <= R_outer``.

    ``(h1, h2) = (1, r^2)`` on ``[0, r0]`` and on ``[r1, R_outer]``; between
    them ``(h1, h2) = sqrt(1 + r^4) (cos a, sin a)`` where the winding angle
    ``a = atan(r^2) + 2π S((r - r0) / (r1 - r0))`` and ``S`` is the quintic
    smooth step.  ``angle`` is ``a`` itself and ``twist_angle = a - atan(r^2)``
    the turning relative to the standard pair, which goes from 0 to ``2π``.
    Expressions are sympy objects in the symbol ``r``; fields live on the
    one-axis chart ``(r,)``.
    """

    R_outer: float
    eps_match: float
    r0: float
    r1: float
    h1_expr: sp.Expr
    h2_expr: sp.Expr
    angle_expr: sp.Expr
    twist_expr: sp.Expr
    twist: str = "full"

    @property
    def chart(self) -> Chart:
        return Chart.from_axes(r=(0.0, self.R_outer))

    def _field(self, expr) -> ScalarField:
        return ScalarField.symbolic(expr, (_R,))

    @property
    def h1(self) -> ScalarField:
        return self._field(self.h1_expr)

    @property
    def h2(self) -> ScalarField:
        return self._field(self.h2_expr)

    @property
    def angle(self) -> ScalarField:
        return self._field(self.angle_expr)

    @property
    def twist_angle(self) -> ScalarField:
        return self._field(self.twist_expr)

    def on_chart(self, chart: Chart, r_axis: str = "r") -> tuple[ScalarField, ScalarField]:
        """``(h1, h2)`` as fields on another chart with a radial axis."""
        sym = chart.symbols()[chart.axis(r_axis)]
        return tuple(ScalarField.symbolic(e.subs(_R, sym), chart.symbols()) for e in (self.h1_expr, self.h2_expr))

    def contact_quantity(self, r) -> np.ndarray:
        """``h1 h2' - h2 h1'`` at radii ``r``."""
        pts = np.asarray(r, dtype=float)[..., None]
        h1, h2 = self.h1, self.h2
        return h1(pts) * h2.partial(0)(pts) - h2(pts) * h1.partial(0)(pts)

    def winding(self, samples: int = 20_001) -> float:
        """Total winding of ``(h1, h2)`` over ``[0, R_outer]`` by unwrapping the polar angle."""
        r = np.linspace(0.0, self.R_outer, samples)[:, None]
        phase = np.unwrap(np.arctan2(self.h2(r), self.h1(r)))
        return float(phase[-1] - phase[0])

    def check(self, samples: int = 10_000) -> CheckReport:
        """Contact quantity on ``samples`` radii in ``(0, R_outer]`` plus matching and turning data."""
        r = np.linspace(self.R_outer / samples, self.R_outer, samples)
        q = self.contact_quantity(r)
        worst = int(np.argmin(q))
        outer = r[r >= self.R_outer - self.eps_match][:, None]
        match = max(np.max(np.abs(self.h1(outer) - 1.0)), np.max(np.abs(self.h2(outer) - outer[:, 0] ** 2)))
        net = self.winding() - math.atan(self.R_outer**2)
        passed = bool(q[worst] > 0 and match == 0.0 and abs(net - TWO_PI) < 1e-9)
        return CheckReport(
            name="lutz_profile",
            passed=passed,
            tier=Tier.EXACT,
            metric="min h1 h2' - h2 h1'",
            value=float(q[worst]),
            tolerance=0.0,
            grid_points=samples,
            witness=None if passed else (float(r[worst]),),
            details={"matching_deviation": float(match), "net_twist": net, "winding": net + math.atan(self.R_outer**2)},
        )


def lutz_profile(R_outer: float, eps_match: float | None = None) -> LutzProfile:
    """Full Lutz profile on ``[0, R_outer]`` with a matching zone of width ``eps_match``.

    The twist happens on ``[eps_match, R_outer - eps_match]``; ``eps_match``
    defaults to ``R_outer / 10`` and may not exceed it.
    """
    if R_outer <= 0:
        raise ValueError("R_outer must be positive")
    eps = R_outer / 10.0 if eps_match is None else float(eps_match)
    if eps <= 0 or R_outer < 10.0 * eps * (1 - 1e-12):
        raise ValueError(f"R_outer={R_outer} is too small for a matching zone of width {eps} (need R_outer >= 10 eps)")
    r0, r1 = eps, R_outer - eps
    if r0 <= R_MIN:
        raise ValueError("matching zone collapses onto the core")
    r = _R
    base = sp.atan(r**2)
    turn = 2 * sp.pi * quintic_step((r - r0) / (r1 - r0))
    a = base + turn
    rho = sp.sqrt(1 + r**4)
    outside = sp.Or(r <= r0, r >= r1)
    h1 = sp.Piecewise((1, outside), (rho * sp.cos(a), True))
    h2 = sp.Piecewise((r**2, outside), (rho * sp.sin(a), True))
    return LutzProfile(float(R_outer), eps, r0, r1, h1, h2, a, turn)


def _region_deviation(pair: FoliatedContactPair, region_pts: np.ndarray, r_axis, z_axis, theta_axis) -> float:
    chart = pair.chart
    r = region_pts[:, chart.axis(r_axis)]
    expected = np.zeros((len(region_pts), chart.dim))
    expected[:, chart.axis(z_axis)] = 1.0
    expected[:, chart.axis(theta_axis)] = r**2
    return float(np.max(np.abs(pair.alpha.coefficients(region_pts) - expected)))


def lutz_twist(
    local_pair: FoliatedContactPair,
    profile: LutzProfile,
    r_axis: str = "r",
    z_axis: str = "z",
    theta_axis: str = "theta",
    grid=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> FoliatedContactPair:
    """Replace ``dz + r^2 dtheta`` by ``h1 dz + h2 dtheta`` on ``r <= R_outer``.

    Outside the twist region the coefficients are the input's own fields,
    so evaluations there are bit-identical.  Raises :class:`DomainError` if
    the region does not fit in the chart and :class:`ModelMismatchError`
    if the input differs from the standard model on the region.
    """
    chart = local_pair.chart
    ri = chart.axis(r_axis)
    r_hi = chart.bounds[ri][1]
    if profile.R_outer > r_hi:
        raise DomainError(f"twist radius {profile.R_outer} exceeds the chart radius {r_hi}")
    pts = grid_points(chart, grid)
    region = pts[pts[:, ri] <= profile.R_outer]
    deviation = _region_deviation(local_pair, region, r_axis, z_axis, theta_axis) if len(region) else 0.0
    if deviation > tol.exact:
        raise ModelMismatchError("input does not match dz + r^2 dtheta on the twist region", deviation)
    h1, h2 = profile.on_chart(chart, r_axis)
    R = profile.R_outer

    def inside(p):
        return p[..., ri] <= R

    replacement = {(chart.axis(z_axis),): h1, (chart.axis(theta_axis),): h2}
    comps = {}
    for k in range(chart.dim):
        original = local_pair.alpha.component((k,))
        comps[(k,)] = where(inside, replacement.get((k,), 0.0), original)
    alpha = DifferentialForm(chart, 1, comps)
    twisted = FoliatedContactPair(chart, local_pair.beta, alpha, local_pair.orientation_form, name=f"lutz({local_pair.name})")
    return twisted.certify(grid, tol)


# ---------------------------------------------------------------------------
# Overtwisted discs
# ---------------------------------------------------------------------------


def _leaf_data(obj):
    if isinstance(obj, (FoliatedContactPair, LeafContactForm)):
        return obj.chart, obj.alpha
    if isinstance(obj, DifferentialForm):
        return obj.chart, obj
    raise TypeError(f"cannot read a contact form from {type(obj).__name__}")


def detect_overtwisted_disk(
    obj,
    r_axis: str = "r",
    z_axis: str = "z",
    theta_axis: str = "theta",
    at: Mapping[str, float] | None = None,
    samples: int = 4097,
    radial_tol: float = 1e-9,
) -> float | None:
    """Smallest radius where the polar angle of ``(alpha(∂z), alpha(∂theta))`` reaches π.

    At that radius the circle ``{z = z0, r = r*}`` is Legendrian and bounds
    an overtwisted disc.  The coefficients are sampled on the slice through
    ``z = 0`` (or the chart midpoint), ``theta = 0`` and the coordinates in
    ``at``; the input must be radial there (no ``dr`` component, no ``z`` or
    ``theta`` dependence), otherwise :class:`ModelMismatchError` is raised.
    Returns ``None`` if the angle stays below π.
    """
    chart, alpha = _leaf_data(obj)
    ri, zi, ti = chart.axis(r_axis), chart.axis(z_axis), chart.axis(theta_axis)
    base = np.zeros(chart.dim)
    for i, bound in enumerate(chart.bounds):
        if bound is not None:
            base[i] = 0.0 if bound[0] <= 0.0 <= bound[1] else 0.5 * (bound[0] + bound[1])
    for name, value in (at or {}).items():
        base[chart.axis(name)] = float(value)
    lo, hi = chart.bounds[ri]
    radii = np.linspace(lo, hi, samples)

    def coeffs(r, z=None, theta=0.0):
        pts = np.tile(base, (np.size(r), 1))
        pts[:, ri] = r
        pts[:, ti] = theta
        if z is not None:
            pts[:, zi] = z
        c = alpha.coefficients(pts)
        return c[:, zi], c[:, ti], c[:, ri], c

    h1, h2, hr, c0 = coeffs(radii)
    scale = max(1.0, float(np.max(np.abs(c0))))
    deviation = float(np.max(np.abs(hr)))
    coarse = radii[:: max(1, samples // 64)]
    z_lo, z_hi = chart.bounds[zi] if chart.bounds[zi] is not None else (0.0, 1.0)
    ref = coeffs(coarse)[3]
    for theta in (1.3, 2.9, 4.4):
        for z in (z_lo + 0.25 * (z_hi - z_lo), z_hi - 0.1 * (z_hi - z_lo)):
            deviation = max(deviation, float(np.max(np.abs(coeffs(coarse, z, theta)[3] - ref))))
    if deviation > radial_tol * scale:
        raise ModelMismatchError("contact form is not radial on the sampled slice", deviation)

    phase = np.unwrap(np.arctan2(h2, h1))
    phase = phase - (np.round(phase[0] / TWO_PI) * TWO_PI)
    crossed = np.flatnonzero(phase >= math.pi)
    if not crossed.size:
        return None
    k = int(crossed[0])
    if k == 0:
        return float(radii[0])

    def offset(r):
        a, b, _, _ = coeffs(np.array([r]))
        return math.atan2(-b[0], -a[0])

    return float(brentq(offset, radii[k - 1], radii[k], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


# ---------------------------------------------------------------------------
# Vanishing families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneFieldPath:
    """Homotopy of leafwise 1-forms from ``dz + r^2 dtheta`` (s=0) to the Lutz form (s=1).

    With ``E1 = (dz + r^2 dtheta)/rho``, ``E2 = (-r^2 dz + dtheta)/rho``
    (``rho = sqrt(1 + r^4)``) and the relative twist ``u(r)``, the unit
    coefficient vector at ``s`` is ``E1`` rotated by ``u`` about the axis
    ``cos(σ) E1 + sin(σ) dr``, ``σ = π s / 2``.  At ``s = 1`` this is the
    rotation inside the ``(dz, dtheta)`` plane; for every ``s`` it equals
    ``E1`` where ``u`` is a multiple of ``2π``, so the path is constant
    outside the twist zone and the form never vanishes.
    """

    profile: LutzProfile
    expressions: tuple  # (dz, dr, dtheta) coefficients in r and symbols sin_s, cos_s
    sin_s: sp.Symbol
    cos_s: sp.Symbol

    @staticmethod
    def angle_factors(s: float) -> tuple[float, float]:
        """``(sin σ, cos σ)`` with exact values at the end points."""
        if s == 0.0:
            return 0.0, 1.0
        if s == 1.0:
            return 1.0, 0.0
        return math.sin(0.5 * math.pi * s), math.cos(0.5 * math.pi * s)

    def form(self, chart: Chart, s: float, r_axis="r", z_axis="z", theta_axis="theta") -> DifferentialForm:
        """The member at ``s`` as a 1-form on ``chart``."""
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        sn, cs = self.angle_factors(float(s))
        sym = chart.symbols()[chart.axis(r_axis)]
        comps = {}
        for axis, expr in zip((z_axis, r_axis, theta_axis), self.expressions):
            e = expr.subs({self.sin_s: sn, self.cos_s: cs, _R: sym})
            comps[(chart.axis(axis),)] = ScalarField.symbolic(e, chart.symbols())
        return DifferentialForm(chart, 1, comps)


def plane_field_path(profile: LutzProfile) -> PlaneFieldPath:
    r = _R
    sn, cs = sp.symbols("sin_s cos_s", real=True)
    u = profile.twist_expr
    A = cs**2 + sn**2 * sp.cos(u)
    B = sn * sp.sin(u)
    C = sn * cs * (1 - sp.cos(u))
    rho = sp.sqrt(1 + r**4)
    exprs = (A - B * r**2, C * rho, A * r**2 + B)
    return PlaneFieldPath(profile, exprs, sn, cs)


@dataclass(frozen=True)
class VanishingLutzFamily:
    """Lutz twists switched on and off along ``t`` by a cut-off ``chi``.

    ``pair`` holds the 1-form ``p_{chi(t)}`` on ``(t, z, r, theta)`` with
    ``beta = dt``; it is deliberately not certified, since intermediate
    leaves need not be contact.  ``mask_times``, ``chi_values``,
    ``contact_mask`` and ``min_ratio`` record the leafwise contact check on
    each sampled leaf.
    """

    intervals: tuple
    chi: ScalarField
    chi_expr: sp.Expr
    profile_path: PlaneFieldPath
    pair: FoliatedContactPair
    mask_times: np.ndarray
    chi_values: np.ndarray
    contact_mask: np.ndarray
    min_ratio: np.ndarray

    def leaf_form(self, t: float) -> DifferentialForm:
        """The plane field's defining form on the leaf ``{t}`` as a form on the full chart."""
        chi = float(self.chi(np.array([[t, 0.0, 1.0, 0.0]])))
        return self.profile_path.form(self.pair.chart, chi)


def _cutoff(t, intervals):
    (a0, b0), (a1, b1), (a2, b2) = intervals
    lo = a2 + 0.25 * (a1 - a2)
    hi = b2 - 0.25 * (b2 - b1)
    up = smooth_step((t - lo) / (a1 - lo))
    down = smooth_step((hi - t) / (hi - b1))
    chi = sp.Piecewise((0, t <= lo), (0, t >= hi), (1, (t >= a1) & (t <= b1)), (up, t < a1), (down, True))
    sn_up, sn_dn = sp.sin(sp.pi / 2 * up), sp.sin(sp.pi / 2 * down)
    cs_up, cs_dn = sp.cos(sp.pi / 2 * up), sp.cos(sp.pi / 2 * down)
    sin_s = sp.Piecewise((0, t <= lo), (0, t >= hi), (1, (t >= a1) & (t <= b1)), (sn_up, t < a1), (sn_dn, True))
    cos_s = sp.Piecewise((1, t <= lo), (1, t >= hi), (0, (t >= a1) & (t <= b1)), (cs_up, t < a1), (cs_dn, True))
    return chi, sin_s, cos_s


def vanishing_lutz_family(
    intervals=((0.4, 0.6), (0.3, 0.7), (0.1, 0.9)),
    R_outer: float = 0.8,
    radius: float = 1.0,
    mask_samples: int = 41,
    leaf_grid: int = 9,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VanishingLutzFamily:
    """Build the family over ``I2 = intervals[2]`` with ``chi = 1`` on ``I1`` and ``chi = 0`` near ``∂I2``.

    ``intervals`` are ``(I, I1, I2)`` as open ``(lo, hi)`` pairs with
    ``I ⊊ I1 ⊊ I2`` strictly nested.  The cut-off ramps up on the inner
    three quarters of each component of ``I2 - I1`` and is ``C^∞`` and
    monotone there.
    """
    try:
        (a0, b0), (a1, b1), (a2, b2) = [tuple(map(float, iv)) for iv in intervals]
    except (TypeError, ValueError) as exc:
        raise ValueError("intervals must be three (lo, hi) pairs") from exc
    if not (a2 < a1 < a0 < b0 < b1 < b2):
        raise ValueError(f"intervals must be strictly nested I ⊊ I1 ⊊ I2, got {intervals}")
    if R_outer > radius:
        raise DomainError("twist radius exceeds the tube radius")
    intervals = ((a0, b0), (a1, b1), (a2, b2))
    chart = local_chart(radius, t_range=(a2, b2))
    tsym, _, rsym, _ = chart.symbols()
    chi_expr, sin_s, cos_s = _cutoff(tsym, intervals)
    path = plane_field_path(lutz_profile(R_outer))
    comps = {}
    for axis, expr in zip(("z", "r", "theta"), path.expressions):
        e = expr.subs({path.sin_s: sin_s, path.cos_s: cos_s, _R: rsym})
        comps[(chart.axis(axis),)] = ScalarField.symbolic(e, chart.symbols())
    alpha = DifferentialForm(chart, 1, comps)
    beta = chart.d("t")
    pair = FoliatedContactPair(chart, beta, alpha, leaf_orientation(chart, beta, ("z", "r", "theta")), name="vanishing_lutz")
    chi = ScalarField.symbolic(chi_expr, chart.symbols())

    special = [a2, a1, a0, b0, b1, b2]
    times = np.unique(np.concatenate([np.linspace(a2, b2, mask_samples), special]))
    leaf = Chart.from_axes(z=chart.bounds[1], r=chart.bounds[2], theta=TWO_PI).grid(leaf_grid)
    pts = np.concatenate([np.full((len(times), len(leaf), 1), times[:, None, None]), np.broadcast_to(leaf, (len(times),) + leaf.shape)], axis=-1)
    ratio = _top(pair.contact_volume, pts) / _top(pair.orientation_form, pts)
    min_ratio = ratio.min(axis=1)
    chi_values = chi(np.concatenate([times[:, None], np.zeros((len(times), 3)) + [0.0, 0.5, 0.0]], axis=1))
    return VanishingLutzFamily(
        intervals=intervals,
        chi=chi,
        chi_expr=chi_expr,
        profile_path=path,
        pair=pair,
        mask_times=times,
        chi_values=chi_values,
        contact_mask=min_ratio > tol.positivity,
        min_ratio=min_ratio,
    )


# ---------------------------------------------------------------------------
# Cut-off interpolation to the standard model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interpolation:
    """``f̃ = δ r^2 χ(r) + f (1 - χ(r))`` with its positivity certificate."""

    field: ScalarField
    cutoff: ScalarField
    delta: float
    R: float
    report: CheckReport
    bounds_report: CheckReport


def interpolate_to_standard(
    f: ScalarField,
    delta: float,
    R: float,
    chart: Chart | None = None,
    grid=None,
    r_axis: str = "r",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Interpolation:
    """Blend ``f`` into ``δ r^2`` near the core with ``χ = 1`` on ``[0, R/3]`` and 0 on ``[2R/3, R]``.

    ``∂_r f̃ = χ' (δ r^2 - f) + (2 r δ χ + ∂_r f (1 - χ))``; both bracketed
    terms are reported and their sum must be positive on every grid point,
    otherwise :class:`CertificationError` is raised.
    """
    if delta <= 0 or R <= 0:
        raise ValueError("delta and R must be positive")
    chart = local_chart(R) if chart is None else chart
    ri = chart.axis(r_axis)
    rsym = chart.symbols()[ri]
    chi_expr = 1 - smooth_step((rsym - R / 3) / (R / 3))
    chi = ScalarField.symbolic(chi_expr, chart.symbols())
    r2 = ScalarField.symbolic(rsym**2, chart.symbols())
    one_minus = 1.0 - chi
    blended = delta * (r2 * chi) + f * one_minus

    bounds = verify_radial_bounds(f, delta, chart, grid, r_axis=r_axis, t_axis=None, tol=tol)
    pts = grid_points(chart, grid)
    pts = pts[pts[:, ri] > 0]
    r = pts[:, ri]
    fv, chiv = f(pts), chi(pts)
    dchi = chi.partial(ri)(pts)
    df = f.partial(ri, tol.fd_step)(pts)
    cutoff_term = dchi * (delta * r**2 - fv)
    growth_term = 2.0 * r * delta * chiv + df * (1.0 - chiv)
    total = cutoff_term + growth_term
    worst = int(np.argmin(total))
    passed = bool(total[worst] > 0)
    report = CheckReport(
        name="interpolation",
        passed=passed,
        tier=Tier.combine(f.tier, f.partial(ri, tol.fd_step).tier),
        metric="min d_r f_tilde",
        value=float(total[worst]),
        tolerance=0.0,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={
            "min_cutoff_term": float(cutoff_term.min()),
            "min_growth_term": float(growth_term.min()),
            "cutoff_term_at_witness": float(cutoff_term[worst]),
            "growth_term_at_witness": float(growth_term[worst]),
        },
    )
    if not passed:
        which = "cutoff term" if cutoff_term[worst] <= 0 else "growth term"
        raise CertificationError(f"d_r f_tilde <= 0 (the {which} is nonpositive there)", report)
    return Interpolation(blended, chi, float(delta), float(R), report, bounds)


# ---------------------------------------------------------------------------
# Connected sum along a divisor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlueReport:
    residual_f0: float
    residual_f1: float
    contact: CheckReport
    min_ratio_off_zero: float
    side_reports: tuple
    grid_points: int

    @property
    def passed(self) -> bool:
        return self.contact.passed and max(self.residual_f0, self.residual_f1) < DEFAULT_TOLERANCES.exact

    def to_check(self) -> CheckReport:
        return CheckReport(
            name="glue",
            passed=self.passed,
            tier=Tier.EXACT,
            metric="max |F* (alpha_S + r^2 dtheta) - (alpha_S + t dtheta)|",
            value=max(self.residual_f0, self.residual_f1),
            tolerance=DEFAULT_TOLERANCES.exact,
            grid_points=self.grid_points,
            details={
                "residual_f0": self.residual_f0,
                "residual_f1": self.residual_f1,
                "contact": self.contact.to_dict(),
                "min_ratio_off_zero": self.min_ratio_off_zero,
            },
        )


def gluing_chart(epsilon: float) -> Chart:
    """``S × (-ε^2, ε^2) × S^1`` with coordinates ``(s, w, t, theta)``."""
    e2 = epsilon**2
    return Chart.from_axes(s=1.0, w=1.0, t=(-e2, e2), theta=TWO_PI)


def gluing_maps(epsilon: float, side0: Chart, side1: Chart) -> tuple[ChartMap, ChartMap]:
    """``F0(s, w, t, θ) = (s, w, √t, θ)`` on ``t > 0`` and ``F1 = (s, w, √(-t), -θ)`` on ``t < 0``."""
    glue = gluing_chart(epsilon)
    e2 = epsilon**2
    pos, neg = glue.restrict(t=(0.0, e2)), glue.restrict(t=(-e2, 0.0))
    s, w, t, th = glue.symbols()
    f0 = ChartMap.from_expressions(pos, side0, [s, w, sp.sqrt(t), th])
    f1 = ChartMap.from_expressions(neg, side1, [s, w, sp.sqrt(-t), -th])
    return f0, f1


def _check_side(side: FoliatedContactPair, epsilon: float, slope: float, grid, tol) -> CheckReport:
    model = divisor_side(epsilon, slope, certify=False)
    if side.chart != model.chart:
        raise ModelMismatchError("side chart differs from S × D^2_{2ε}", float("inf"))
    pts = grid_points(side.chart, grid)
    deviation = max((side.alpha - model.alpha).max_abs(pts), (side.beta - model.beta).max_abs(pts))
    if deviation > tol.exact:
        raise ModelMismatchError("side does not match (beta_S, alpha_S + r^2 dtheta)", deviation)
    return _ensure(side, grid, tol).certificate


def divisor_connected_sum(
    side0: FoliatedContactPair | None = None,
    side1: FoliatedContactPair | None = None,
    epsilon: float = 0.5,
    slope: float = 0.25,
    grid=17,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[FoliatedContactPair, GlueReport]:
    """Glue two normal-disc models into ``(beta_S, alpha_S + t dtheta)`` on the gluing region.

    Residuals compare ``F0*`` and ``F1*`` of the side forms with the gluing
    form on the coordinate frame over interior grids of ``t > 0`` and
    ``t < 0``.
    """
    side0 = divisor_side(epsilon, slope) if side0 is None else side0
    side1 = divisor_side(epsilon, slope) if side1 is None else side1
    side_reports = (_check_side(side0, epsilon, slope, grid, tol), _check_side(side1, epsilon, slope, grid, tol))

    chart = gluing_chart(epsilon)
    beta, alpha_s = divisor_form(chart, slope)
    t = chart.symbols()[2]
    alpha = alpha_s + DifferentialForm.from_expressions(chart, 1, {(3,): t})
    glued = FoliatedContactPair(chart, beta, alpha, leaf_orientation(chart, beta, ("w", "t", "theta")), name="divisor_sum")

    f0, f1 = gluing_maps(epsilon, side0.chart, side1.chart)
    residuals = []
    for fmap, side in ((f0, side0), (f1, side1)):
        pts = fmap.source.grid(grid, interior=True)
        fmap(pts, check=True)
        target = DifferentialForm(fmap.source, 1, alpha.components)
        target_beta = DifferentialForm(fmap.source, 1, beta.components)
        res = max(
            (pullback(fmap, side.alpha) - target).max_abs(pts),
            (pullback(fmap, side.beta) - target_beta).max_abs(pts),
        )
        residuals.append(res)

    pts = chart.grid(grid, interior=True)
    contact = verify_contact_foliation(glued, pts, tol)
    off = pts[np.abs(pts[:, 2]) > 1e-3 * epsilon**2]
    ratio = _top(glued.contact_volume, off) / _top(glued.orientation_form, off)
    if contact.passed:
        glued = dataclasses.replace(glued, certificate=contact)
    report = GlueReport(residuals[0], residuals[1], contact, float(ratio.min()), side_reports, len(pts))
    return glued, report
