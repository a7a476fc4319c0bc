"""Built-in models: explicit foliated contact and symplectic structures on charts.

Every pair returned here has been certified by its verifier on the default
grid.  :data:`MODELS` is the registry used by the command line; its keys and
parameter names form the vocabulary of config files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import sympy as sp

from leafwise.forms import Chart, ChartMap, DifferentialForm, ScalarField
from leafwise.foliated import (
    FoliatedContactPair,
    LeafContactForm,
    SymplecticFoliationPair,
    leaf_orientation,
)
from leafwise.flows import ContactFamily, PARAM_AXIS
from leafwise.tolerances import R_MIN

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------


def torus_chart() -> Chart:
    """``T^4`` with coordinates ``(t, x, y, z)``, all of period 1."""
    return Chart.from_axes(t=1.0, x=1.0, y=1.0, z=1.0)


def local_chart(radius: float = 1.0, t_range=(0.0, 1.0), z_range=(-1.0, 1.0)) -> Chart:
    """``I × D^3`` in cylindrical coordinates ``(t, z, r, theta)`` with ``r >= r_min``."""
    if radius <= R_MIN:
        raise ValueError(f"radius must exceed {R_MIN}")
    return Chart.from_axes(t=tuple(t_range), z=tuple(z_range), r=(R_MIN, float(radius)), theta=TWO_PI)


def leaf_box(half_width: float = 1.0) -> Chart:
    w = float(half_width)
    return Chart.from_axes(x=(-w, w), y=(-w, w), z=(-w, w))


# ---------------------------------------------------------------------------
# Contact pairs
# ---------------------------------------------------------------------------


def t4_model(p: float = 0.0, q: float = 0.0, r: float = 0.0, s: float = 1.0, certify: bool = True) -> FoliatedContactPair:
    """``beta = p dx + q dy + r dz - s dt`` rescaled to ``s = 1``, ``alpha = sin(2πz) dx + cos(2πz) dy``.

    The contact ratio against ``dt∧dx∧dy∧dz`` is ``2π`` for every ``(p, q, r)``.
    """
    if s == 0:
        raise ValueError("s must be nonzero (beta needs a dt component)")
    chart = torus_chart()
    z = chart.symbols()[3]
    beta = DifferentialForm(chart, 1, {(0,): -1.0, (1,): p / s, (2,): q / s, (3,): r / s})
    alpha = DifferentialForm.from_expressions(chart, 1, {(1,): sp.sin(2 * sp.pi * z), (2,): sp.cos(2 * sp.pi * z)})
    pair = FoliatedContactPair(chart, beta, alpha, name="t4")
    return pair.certify() if certify else pair


def standard_local_model(radius: float = 1.0, t_range=(0.0, 1.0), z_range=(-1.0, 1.0), certify: bool = True) -> FoliatedContactPair:
    """``beta = dt``, ``alpha = dz + r^2 dtheta`` on ``I × D^3``.

    Orientation ``dz∧dr∧dtheta∧dt``, so the contact ratio is ``2r``.
    """
    chart = local_chart(radius, t_range, z_range)
    r = chart.symbols()[2]
    alpha = DifferentialForm.from_expressions(chart, 1, {(1,): 1, (3,): r**2})
    beta = chart.d("t")
    pair = FoliatedContactPair(chart, beta, alpha, leaf_orientation(chart, beta, ("z", "r", "theta")), name="local")
    return pair.certify() if certify else pair


def overtwisted_model(r_max: float = 1.5 * math.pi, certify: bool = True) -> LeafContactForm:
    """``cos(r) dz + r sin(r) dtheta`` on ``(z, r, theta)``, ``r`` in ``[r_min, r_max]``."""
    chart = Chart.from_axes(z=(-1.0, 1.0), r=(R_MIN, float(r_max)), theta=TWO_PI)
    r = chart.symbols()[1]
    alpha = DifferentialForm.from_expressions(chart, 1, {(0,): sp.cos(r), (2,): r * sp.sin(r)})
    form = LeafContactForm(chart, alpha, name="overtwisted")
    return form.certify() if certify else form


def mapping_torus_leaf(half_width: float = 1.0, certify: bool = True) -> LeafContactForm:
    """Leaf contact form ``dz + x dy`` on a box."""
    chart = leaf_box(half_width)
    x = chart.symbols()[0]
    form = LeafContactForm(chart, DifferentialForm.from_expressions(chart, 1, {(1,): x, (2,): 1}), name="leaf")
    return form.certify() if certify else form


def hamiltonian(h_const: float = 0.0, h_lin: float = 0.0, h_quad: float = 1.0):
    """``H = h_const + h_lin x + h_quad (x^2 + y^2 + z^2) / 2`` as a sympy expression in the leaf symbols."""
    x, y, z = leaf_box().symbols()
    return sp.sympify(h_const) + h_lin * x + h_quad * (x**2 + y**2 + z**2) / 2


def mapping_torus_model(H=None, half_width: float = 1.0, certify: bool = True) -> FoliatedContactPair:
    """Suspension of ``(L, dz + x dy)``: ``beta = dt`` and ``alpha = dz + x dy - H dt``.

    ``alpha`` annihilates ``ker(dz + x dy) ∩ ker dt`` and ``∂t + X`` for any
    ``X`` with ``alpha_L(X) = H``.  ``H`` may be a sympy expression in
    ``x, y, z``, a scalar field on the leaf chart, or a number; the default is
    the quadratic ``(x^2 + y^2 + z^2) / 2``.
    """
    leaf = leaf_box(half_width)
    chart = Chart.from_axes(t=(0.0, 1.0)).product(leaf)
    if H is None:
        H = hamiltonian()
    if isinstance(H, ScalarField):
        drop = ChartMap(chart, leaf, [ScalarField.coordinate(i) for i in (1, 2, 3)])
        h_field = H.compose(drop)
    else:
        subs = dict(zip(leaf.symbols(), chart.symbols()[1:]))
        h_field = ScalarField.symbolic(sp.sympify(H).subs(subs), chart.symbols())
    x = chart.symbols()[1]
    alpha = DifferentialForm(
        chart, 1, {(0,): -h_field, (2,): ScalarField.symbolic(x, chart.symbols()), (3,): 1.0}
    )
    beta = chart.d("t")
    pair = FoliatedContactPair(chart, beta, alpha, leaf_orientation(chart, beta, ("x", "y", "z")), name="mapping_torus")
    return pair.certify() if certify else pair


def divisor_chart(epsilon: float = 0.5) -> Chart:
    """``T^2(s, w) × D^2_{2ε}`` in polar coordinates ``(s, w, r, theta)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return Chart.from_axes(s=1.0, w=1.0, r=(R_MIN, 2.0 * epsilon), theta=TWO_PI)


def divisor_form(chart: Chart, slope: float = 0.25):
    """``(beta_S, alpha_S) = (ds, dw + slope cos(2πw) ds)`` on a chart with ``s, w`` axes."""
    w = chart.symbols()[chart.axis("w")]
    beta = chart.d("s")
    alpha = DifferentialForm.from_expressions(chart, 1, {(chart.axis("w"),): 1, (chart.axis("s"),): slope * sp.cos(2 * sp.pi * w)})
    return beta, alpha


def divisor_side(epsilon: float = 0.5, slope: float = 0.25, certify: bool = True) -> FoliatedContactPair:
    """Neighbourhood model ``(beta_S, alpha_S + r^2 dtheta)`` of the divisor ``S = T^2``."""
    chart = divisor_chart(epsilon)
    beta, alpha_s = divisor_form(chart, slope)
    r = chart.symbols()[2]
    alpha = alpha_s + DifferentialForm.from_expressions(chart, 1, {(3,): r**2})
    pair = FoliatedContactPair(chart, beta, alpha, leaf_orientation(chart, beta, ("w", "r", "theta")), name="divisor_side")
    return pair.certify() if certify else pair


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def rotating_t4_family(p: float = 0.0, q: float = 0.0, r: float = 0.0) -> ContactFamily:
    """``alpha_s = sin(2π(z+s)) dx + cos(2π(z+s)) dy`` with ``beta = p dx + q dy + r dz - dt``.

    The Gray field is ``X = -∂z - r ∂t``; for ``r = 0`` the flow is ``z ↦ z - s``.
    """
    chart = torus_chart()
    z = chart.symbols()[3]
    s = sp.Symbol(PARAM_AXIS, real=True)
    beta = DifferentialForm(chart, 1, {(0,): -1.0, (1,): p, (2,): q, (3,): r})
    arg = 2 * sp.pi * (z + s)
    return ContactFamily.from_expressions(chart, beta, {(1,): sp.sin(arg), (2,): sp.cos(arg)}, name="rotating_t4")


def reparametrized_t4_family(amplitude: float = 0.1, p: float = 0.0, q: float = 0.0) -> ContactFamily:
    """``alpha_s = sin(2πw) dx + cos(2πw) dy`` with ``w = z + amplitude s sin(2πz)``.

    Each member is the pullback of ``alpha_0`` by a diffeomorphism of ``z``
    (``2π amplitude < 1``), so the Gray field is nonconstant along its flow.
    """
    if not 0 <= TWO_PI * amplitude < 1:
        raise ValueError("need 0 <= 2π amplitude < 1")
    chart = torus_chart()
    z = chart.symbols()[3]
    s = sp.Symbol(PARAM_AXIS, real=True)
    beta = DifferentialForm(chart, 1, {(0,): -1.0, (1,): p, (2,): q})
    w = z + sp.nsimplify(amplitude) * s * sp.sin(2 * sp.pi * z)
    return ContactFamily.from_expressions(
        chart, beta, {(1,): sp.sin(2 * sp.pi * w), (2,): sp.cos(2 * sp.pi * w)}, name="reparametrized_t4"
    )


# ---------------------------------------------------------------------------
# Symplectic foliations
# ---------------------------------------------------------------------------


def standard_symplectic_foliation(n: int = 1, half_width: float = 1.0, certify: bool = True) -> SymplecticFoliationPair:
    """``R × C^n`` with ``beta = dt`` and ``Omega = Σ dx_i ∧ dy_i`` (``n`` in {1, 2})."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    w = float(half_width)
    names = ("x", "y") if n == 1 else ("x1", "y1", "x2", "y2")
    chart = Chart.from_axes(t=(-w, w), **{name: (-w, w) for name in names})
    omega = DifferentialForm(chart, 2, {(2 * i + 1, 2 * i + 2): 1.0 for i in range(n)})
    pair = SymplecticFoliationPair(chart, chart.d("t"), omega, name=f"standard_symplectic_{n}")
    return pair.certify() if certify else pair


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelDescriptor:
    """A registry entry with its parameters filled in.

    ``provenance`` says which classical example the model realises.
    """

    name: str
    parameters: Mapping[str, float]
    chart: Chart
    provenance: str

    def build(self) -> Any:
        return MODELS[self.name].builder(**self.parameters)


@dataclass(frozen=True)
class ModelSpec:
    builder: Callable[..., Any]
    defaults: Mapping[str, float]
    kind: str
    provenance: str
    chart: Callable[..., Chart] = field(default=None)


MODELS: dict[str, ModelSpec] = {
    "t4": ModelSpec(
        t4_model, {"p": 0.0, "q": 0.0, "r": 0.0, "s": 1.0}, "contact",
        "linear foliation of T^4 with the rotating contact form", lambda **_: torus_chart(),
    ),
    "local": ModelSpec(
        standard_local_model, {"radius": 1.0}, "contact",
        "standard tube dz + r^2 dtheta over an interval", lambda radius=1.0, **_: local_chart(radius),
    ),
    "mapping_torus": ModelSpec(
        lambda h_const=0.0, h_lin=0.0, h_quad=1.0: mapping_torus_model(hamiltonian(h_const, h_lin, h_quad)),
        {"h_const": 0.0, "h_lin": 0.0, "h_quad": 1.0}, "contact",
        "suspension of (box, dz + x dy) by a Hamiltonian H",
        lambda **_: Chart.from_axes(t=(0.0, 1.0)).product(leaf_box()),
    ),
    "divisor_side": ModelSpec(
        divisor_side, {"epsilon": 0.5, "slope": 0.25}, "contact",
        "normal-disc model around a codimension-2 contact divisor",
        lambda epsilon=0.5, **_: divisor_chart(epsilon),
    ),
    "overtwisted": ModelSpec(
        overtwisted_model, {"r_max": 1.5 * math.pi}, "leaf",
        "overtwisted contact structure cos(r) dz + r sin(r) dtheta",
        lambda r_max=1.5 * math.pi, **_: Chart.from_axes(z=(-1.0, 1.0), r=(R_MIN, r_max), theta=TWO_PI),
    ),
    "standard_symplectic": ModelSpec(
        lambda n=1: standard_symplectic_foliation(int(n)), {"n": 1}, "symplectic",
        "flat symplectic foliation of R x C^n", lambda n=1, **_: standard_symplectic_foliation(int(n), certify=False).chart,
    ),
    "rotating_t4": ModelSpec(
        rotating_t4_family, {"p": 0.0, "q": 0.0, "r": 0.0}, "family",
        "rotating family on T^4 (Gray flow is a z-translation)", lambda **_: torus_chart(),
    ),
    "reparametrized_t4": ModelSpec(
        reparametrized_t4_family, {"amplitude": 0.1, "p": 0.0, "q": 0.0}, "family",
        "T^4 family pulled back by z-diffeomorphisms", lambda **_: torus_chart(),
    ),
}


def describe(name: str, **parameters: float) -> ModelDescriptor:
    """Descriptor for a registered model; unknown parameter names raise ``KeyError``."""
    if name not in MODELS:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    spec = MODELS[name]
    unknown = set(parameters) - set(spec.defaults)
    if unknown:
        raise KeyError(f"model {name!r} has no parameters {sorted(unknown)}")
    params = {**spec.defaults, **{k: float(v) for k, v in parameters.items()}}
    return ModelDescriptor(name, params, spec.chart(**params), spec.provenance)


def build(name: str, **parameters: float) -> Any:
    return describe(name, **parameters).build()
