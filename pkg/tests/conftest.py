"""Shared random fixtures: trigonometric fields, forms, charts and sample points."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import strategies as st

from leafwise.forms import Chart, DifferentialForm, ScalarField

TWO_PI = 2.0 * math.pi


def torus(dim: int) -> Chart:
    names = ("t", "x", "y", "z", "u", "v")[:dim]
    return Chart.from_axes(**{n: 1.0 for n in names})


def box(dim: int, half: float = 1.0) -> Chart:
    names = ("t", "x", "y", "z", "u", "v")[:dim]
    return Chart.from_axes(**{n: (-half, half) for n in names})


def trig_expr(rng: np.random.Generator, symbols, terms: int = 3, max_wave: int = 2):
    """Sum of ``a sin(2π k·x + φ)`` terms plus a constant, with integer wave vectors."""
    expr = sp.Float(round(rng.uniform(-1, 1), 6))
    for _ in range(terms):
        k = rng.integers(-max_wave, max_wave + 1, size=len(symbols))
        phase = round(rng.uniform(0, TWO_PI), 6)
        amp = round(rng.uniform(-1, 1), 6)
        expr += amp * sp.sin(2 * sp.pi * sum(int(ki) * s for ki, s in zip(k, symbols)) + phase)
    return expr


def trig_field(rng, chart: Chart, opaque: bool = False, **kw) -> ScalarField:
    """Random trig field; ``opaque`` hides the exact partials so the FD path is used."""
    field = ScalarField.symbolic(trig_expr(rng, chart.symbols(), **kw), chart.symbols())
    if opaque:
        return ScalarField(lambda p, f=field: f(p))
    return field


def random_form(rng, chart: Chart, degree: int, opaque: bool = False, density: float = 0.7) -> DifferentialForm:
    comps = {}
    for key in itertools.combinations(range(chart.dim), degree):
        if degree == 0 or rng.uniform() < density:
            comps[key] = trig_field(rng, chart, opaque)
    return DifferentialForm(chart, degree, comps)


def random_points(rng, chart: Chart, n: int = 16, margin: float = 0.0) -> np.ndarray:
    cols = []
    for period, bound in zip(chart.periods, chart.bounds):
        if bound is None:
            cols.append(rng.uniform(0.0, period, n))
        else:
            lo, hi = bound
            pad = margin * (hi - lo)
            cols.append(rng.uniform(lo + pad, hi - pad, n))
    return np.stack(cols, axis=-1)


def scale_of(*arrays) -> float:
    return max([1.0] + [float(np.max(np.abs(a))) for a in arrays if np.size(a)])


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)
