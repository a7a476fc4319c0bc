"""Exterior calculus on coordinate charts.

Scalar fields, differential forms and vector fields are evaluated on batches
of chart points: an array of shape ``(..., dim)`` maps to coefficient arrays
of shape ``(...)``.  Every object is immutable once built.

Forms are stored on strictly increasing multi-indices only; all signs in
wedge, interior product and pullback come from permutation parity.

Partial derivatives are exact whenever the coefficient fields can supply them
(closed-form or symbolic coefficients) and fall back to central finite
differences otherwise.  Results carry a :class:`~leafwise.tolerances.Tier`
tag recording which path was taken.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import sympy as sp

from leafwise.errors import ChartMismatchError, DegreeError, DomainError
from leafwise.tolerances import FD_STEP, GRID_CAP, GRID_POINTS, Tier

__all__ = [
    "Chart",
    "ScalarField",
    "DifferentialForm",
    "VectorField",
    "ChartMap",
    "wedge",
    "exterior_derivative",
    "interior_product",
    "lie_derivative",
    "pullback",
    "evaluate",
    "where",
]

MAX_DIM = 6


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """A coordinate box, possibly periodic along some axes.

    Periodic axes carry a period and no bounds; the remaining axes carry a
    closed interval with nonempty interior.
    """

    axis_names: tuple[str, ...]
    periods: tuple[float | None, ...]
    bounds: tuple[tuple[float, float] | None, ...]

    def __post_init__(self):
        names = tuple(self.axis_names)
        object.__setattr__(self, "axis_names", names)
        object.__setattr__(self, "periods", tuple(None if p is None else float(p) for p in self.periods))
        object.__setattr__(
            self, "bounds", tuple(None if b is None else (float(b[0]), float(b[1])) for b in self.bounds)
        )
        if not 1 <= len(names) <= MAX_DIM:
            raise ValueError(f"chart dimension must lie in [1, {MAX_DIM}], got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names in {names}")
        if not len(self.periods) == len(self.bounds) == len(names):
            raise ValueError("axis_names, periods and bounds must have equal length")
        for name, period, bound in zip(names, self.periods, self.bounds):
            if period is not None:
                if not period > 0:
                    raise ValueError(f"axis {name!r}: period must be positive")
                if bound is not None:
                    raise ValueError(f"axis {name!r}: periodic axes take no bounds")
            elif bound is None or not bound[0] < bound[1]:
                raise ValueError(f"axis {name!r}: bounds must have nonempty interior")

    @classmethod
    def from_axes(cls, **axes: float | tuple[float, float]) -> "Chart":
        """Build a chart from keyword axes, in order.

        A float value declares a periodic axis with that period; a pair
        declares a bounded axis.

        >>> Chart.from_axes(t=(0.0, 1.0), theta=2 * math.pi).dim
        2
        """
        periods, bounds = [], []
        for spec in axes.values():
            if isinstance(spec, (tuple, list)):
                periods.append(None)
                bounds.append(tuple(spec))
            else:
                periods.append(float(spec))
                bounds.append(None)
        return cls(tuple(axes), tuple(periods), tuple(bounds))

    @property
    def dim(self) -> int:
        return len(self.axis_names)

    def axis(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.dim:
                raise IndexError(f"axis index {name} out of range for {self.axis_names}")
            return int(name)
        try:
            return self.axis_names.index(name)
        except ValueError:
            raise KeyError(f"chart has no axis {name!r}; axes are {self.axis_names}") from None

    def is_periodic(self, axis: str | int) -> bool:
        return self.periods[self.axis(axis)] is not None

    def wrap(self, points) -> np.ndarray:
        pts = np.array(points, dtype=float)
        for i, period in enumerate(self.periods):
            if period is not None:
                pts[..., i] = np.mod(pts[..., i], period)
        return pts

    def displacement(self, a, b) -> np.ndarray:
        """``a - b`` with periodic axes reduced to the minimal image."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        d = np.array(d)
        for i, period in enumerate(self.periods):
            if period is not None:
                d[..., i] = (d[..., i] + 0.5 * period) % period - 0.5 * period
        return d

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for i, bound in enumerate(self.bounds):
            if bound is None:
                continue
            slack = 1e-12 * (bound[1] - bound[0])
            inside &= (pts[..., i] >= bound[0] - slack) & (pts[..., i] <= bound[1] + slack)
        return inside & np.all(np.isfinite(pts), axis=-1)

    def require(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1:] != (self.dim,):
            raise DomainError(f"points must have trailing dimension {self.dim}, got shape {pts.shape}")
        inside = self.contains(pts)
        if not np.all(inside):
            bad = pts.reshape(-1, self.dim)[~inside.reshape(-1)][0]
            raise DomainError(f"point {bad} lies outside chart {self.axis_names}")
        return self.wrap(pts)

    def grid(self, counts: int | Sequence[int] = GRID_POINTS, interior: bool = False) -> np.ndarray:
        """Regular grid of chart points, shape ``(N, dim)``, in C order.

        Periodic axes get ``n`` equispaced points starting at 0.  Bounded axes
        get ``n`` points including both endpoints, or strictly inside the
        interval when ``interior`` is true.
        """
        if isinstance(counts, (int, np.integer)):
            counts = (int(counts),) * self.dim
        counts = tuple(int(c) for c in counts)
        if len(counts) != self.dim or min(counts) < 1:
            raise ValueError(f"need {self.dim} positive grid counts, got {counts}")
        if math.prod(counts) > GRID_CAP:
            raise ValueError(f"grid of {math.prod(counts)} points exceeds the cap of {GRID_CAP}")
        axes = []
        for n, period, bound in zip(counts, self.periods, self.bounds):
            if period is not None:
                axes.append(np.arange(n) * (period / n))
            elif interior:
                axes.append(bound[0] + (np.arange(n) + 1) * ((bound[1] - bound[0]) / (n + 1)))
            elif n == 1:
                axes.append(np.array([0.5 * (bound[0] + bound[1])]))
            else:
                axes.append(np.linspace(bound[0], bound[1], n))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def restrict(self, **ranges: tuple[float, float]) -> "Chart":
        """Sub-chart with new bounds on the named (non-periodic) axes."""
        bounds = list(self.bounds)
        for name, rng in ranges.items():
            i = self.axis(name)
            if self.periods[i] is not None:
                raise ValueError(f"cannot restrict periodic axis {name!r}")
            bounds[i] = tuple(rng)
        return Chart(self.axis_names, self.periods, tuple(bounds))

    def product(self, other: "Chart") -> "Chart":
        return Chart(
            self.axis_names + other.axis_names,
            self.periods + other.periods,
            self.bounds + other.bounds,
        )

    def coordinate(self, axis: str | int) -> "ScalarField":
        return ScalarField.coordinate(self.axis(axis))

    def d(self, axis: str | int) -> "DifferentialForm":
        """The coordinate 1-form along ``axis``."""
        return DifferentialForm(self, 1, {(self.axis(axis),): 1.0})

    def partial(self, axis: str | int, scale: float = 1.0) -> "VectorField":
        """The coordinate vector field along ``axis``."""
        return VectorField.coordinate(self, axis, scale)

    def volume_form(self) -> "DifferentialForm":
        return DifferentialForm(self, self.dim, {tuple(range(self.dim)): 1.0})

    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(n, real=True) for n in self.axis_names)


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


class ScalarField:
    """Real function of chart points with optional exact partial derivatives.

    ``value`` maps an array of shape ``(..., dim)`` to shape ``(...)`` (scalars
    are broadcast).  ``partials``, when given, is a sequence of ``dim``
    callables or fields holding the exact first partials.  Without them,
    :meth:`partial` returns a central finite difference.

    Subclasses override :meth:`_evaluate`, :meth:`partial` and the two
    capability flags.
    """

    _partials = None

    def __init__(self, value: Callable[[np.ndarray], np.ndarray], partials: Sequence | None = None):
        if not callable(value):
            raise TypeError("value must be callable")
        self._value = value
        self._partials = None if partials is None else tuple(as_field(f) for f in partials)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.asarray(self._evaluate(pts), dtype=float)
        shape = pts.shape[:-1]
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return out

    def _evaluate(self, pts: np.ndarray):
        return self._value(pts)

    @property
    def has_partials(self) -> bool:
        """True when :meth:`partial` is exact (no finite differencing)."""
        return self._partials is not None

    @property
    def approximate(self) -> bool:
        """True when the value itself involves a finite difference."""
        return False

    @property
    def tier(self) -> Tier:
        return Tier.FD if self.approximate else Tier.EXACT

    def partial(self, i: int, step: float = FD_STEP) -> "ScalarField":
        if self._partials is not None:
            return self._partials[i]
        return _FiniteDifference(self, i, step)

    # algebra ---------------------------------------------------------------

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, as_field(other))])

    __radd__ = __add__

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, as_field(other))])

    def __rsub__(self, other):
        return linear_combination([(1.0, as_field(other)), (-1.0, self)])

    def __neg__(self):
        return linear_combination([(-1.0, self)])

    def __mul__(self, other):
        return product([self, as_field(other)])

    __rmul__ = __mul__

    def compose(self, chart_map: "ChartMap") -> "ScalarField":
        """``self ∘ chart_map`` with chain-rule partials."""
        return _Composed(self, chart_map.components)

    # constructors ------------------------------------------------------------

    @staticmethod
    def constant(c: float) -> "ScalarField":
        return _Constant(float(c))

    @staticmethod
    def coordinate(i: int) -> "ScalarField":
        return _Coordinate(int(i))

    @staticmethod
    def symbolic(expr, coords: Sequence[sp.Symbol], params: Mapping | None = None) -> "ScalarField":
        """Field from a sympy expression in ``coords``; all partials are exact.

        ``params`` binds extra symbols (e.g. a family parameter) to numbers.
        """
        return _Symbolic.make(expr, tuple(coords), params)


def as_field(f) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, (int, float, np.integer, np.floating)):
        return _Constant(float(f))
    if callable(f):
        return ScalarField(f)
    raise TypeError(f"cannot interpret {type(f).__name__} as a scalar field")


class _Constant(ScalarField):
    def __init__(self, c: float):
        self.c = c

    def _evaluate(self, pts):
        return np.full(pts.shape[:-1], self.c)

    @property
    def has_partials(self):
        return True

    def partial(self, i, step=FD_STEP):
        return _ZERO

    def __repr__(self):
        return f"Constant({self.c!r})"


_ZERO = _Constant(0.0)
_ONE = _Constant(1.0)


def _is_const(f: ScalarField, value: float | None = None) -> bool:
    return isinstance(f, _Constant) and (value is None or f.c == value)


class _Coordinate(ScalarField):
    def __init__(self, i: int):
        self.i = i

    def _evaluate(self, pts):
        return pts[..., self.i]

    @property
    def has_partials(self):
        return True

    def partial(self, i, step=FD_STEP):
        return _ONE if i == self.i else _ZERO


class _LinearCombination(ScalarField):
    def __init__(self, terms: tuple[tuple[float, ScalarField], ...]):
        self.terms = terms

    def _evaluate(self, pts):
        total = None
        for c, f in self.terms:
            v = f(pts)
            v = v if c == 1.0 else c * v
            total = v if total is None else total + v
        return total

    @property
    def has_partials(self):
        return all(f.has_partials for _, f in self.terms)

    @property
    def approximate(self):
        return any(f.approximate for _, f in self.terms)

    def partial(self, i, step=FD_STEP):
        return linear_combination([(c, f.partial(i, step)) for c, f in self.terms])


def linear_combination(terms: Iterable[tuple[float, ScalarField]]) -> ScalarField:
    """``Σ c_k f_k`` with constants folded and zero terms dropped."""
    flat: list[tuple[float, ScalarField]] = []
    const = 0.0
    for c, f in terms:
        if c == 0.0:
            continue
        if isinstance(f, _Constant):
            const += c * f.c
        elif isinstance(f, _LinearCombination):
            flat.extend((c * c2, f2) for c2, f2 in f.terms)
        else:
            flat.append((float(c), f))
    if const != 0.0:
        flat.append((1.0, _Constant(const)))
    if not flat:
        return _ZERO
    if len(flat) == 1 and flat[0][0] == 1.0:
        return flat[0][1]
    return _LinearCombination(tuple(flat))


class _Product(ScalarField):
    def __init__(self, factors: tuple[ScalarField, ...]):
        self.factors = factors

    def _evaluate(self, pts):
        out = self.factors[0](pts)
        for f in self.factors[1:]:
            out = out * f(pts)
        return out

    @property
    def has_partials(self):
        return all(f.has_partials for f in self.factors)

    @property
    def approximate(self):
        return any(f.approximate for f in self.factors)

    def partial(self, i, step=FD_STEP):
        terms = []
        for k, f in enumerate(self.factors):
            df = f.partial(i, step)
            if _is_const(df, 0.0):
                continue
            terms.append((1.0, product(self.factors[:k] + (df,) + self.factors[k + 1 :])))
        return linear_combination(terms)


def product(factors: Iterable[ScalarField]) -> ScalarField:
    """``Π f_k`` with constants folded."""
    coeff = 1.0
    rest: list[ScalarField] = []
    for f in factors:
        if isinstance(f, _Constant):
            coeff *= f.c
        elif isinstance(f, _Product):
            rest.extend(f.factors)
        else:
            rest.append(f)
    if coeff == 0.0:
        return _ZERO
    if not rest:
        return _Constant(coeff)
    core = rest[0] if len(rest) == 1 else _Product(tuple(rest))
    return core if coeff == 1.0 else linear_combination([(coeff, core)])


class _FiniteDifference(ScalarField):
    def __init__(self, f: ScalarField, i: int, step: float):
        self.f, self.i, self.step = f, i, float(step)

    def _evaluate(self, pts):
        shift = np.zeros(pts.shape[-1])
        shift[self.i] = self.step
        return (self.f(pts + shift) - self.f(pts - shift)) / (2.0 * self.step)

    @property
    def has_partials(self):
        return False

    @property
    def approximate(self):
        return True


class _Composed(ScalarField):
    def __init__(self, f: ScalarField, inner: tuple[ScalarField, ...]):
        self.f, self.inner = f, inner

    def _evaluate(self, pts):
        mapped = np.stack([g(pts) for g in self.inner], axis=-1)
        return self.f(mapped)

    @property
    def has_partials(self):
        return self.f.has_partials and all(g.has_partials for g in self.inner)

    @property
    def approximate(self):
        return self.f.approximate or any(g.approximate for g in self.inner)

    def partial(self, j, step=FD_STEP):
        if not self.has_partials:
            return _FiniteDifference(self, j, step)
        terms = []
        for i, g in enumerate(self.inner):
            dg = g.partial(j, step)
            if _is_const(dg, 0.0):
                continue
            terms.append((1.0, product([_Composed(self.f.partial(i, step), self.inner), dg])))
        return linear_combination(terms)


class _Where(ScalarField):
    def __init__(self, condition, inside: ScalarField, outside: ScalarField):
        self.condition, self.inside, self.outside = condition, inside, outside

    def _evaluate(self, pts):
        mask = np.asarray(self.condition(pts), dtype=bool)
        return np.where(mask, self.inside(pts), self.outside(pts))

    @property
    def has_partials(self):
        return self.inside.has_partials and self.outside.has_partials

    @property
    def approximate(self):
        return self.inside.approximate or self.outside.approximate

    def partial(self, i, step=FD_STEP):
        return _Where(self.condition, self.inside.partial(i, step), self.outside.partial(i, step))


def where(condition: Callable[[np.ndarray], np.ndarray], inside, outside) -> ScalarField:
    """``inside`` where ``condition(points)`` holds, ``outside`` elsewhere.

    Partials are taken branchwise, which is exact when the two fields agree
    to all orders near the switching set.
    """
    return _Where(condition, as_field(inside), as_field(outside))


@functools.lru_cache(maxsize=4096)
def _lambdify(expr, symbols):
    return sp.lambdify(symbols, expr, modules="numpy")


@functools.lru_cache(maxsize=4096)
def _diff(expr, symbol):
    return sp.diff(expr, symbol)


class _Symbolic(ScalarField):
    def __init__(self, expr, coords, param_syms, param_vals):
        self.expr, self.coords = expr, coords
        self.param_syms, self.param_vals = param_syms, param_vals

    @classmethod
    def make(cls, expr, coords, params):
        expr = sp.sympify(expr)
        params = dict(params or {})
        param_syms = tuple(params)
        param_vals = tuple(float(params[s]) for s in param_syms)
        stray = expr.free_symbols - set(coords) - set(param_syms)
        if stray:
            raise ValueError(f"expression {expr} has unbound symbols {sorted(map(str, stray))}")
        if not expr.free_symbols & set(coords):
            value = expr.subs(dict(zip(param_syms, param_vals)))
            return _Constant(float(value))
        return cls(expr, coords, param_syms, param_vals)

    def _evaluate(self, pts):
        fn = _lambdify(self.expr, self.coords + self.param_syms)
        args = [pts[..., i] for i in range(len(self.coords))]
        if self.expr.has(sp.Piecewise):
            # numpy evaluates every branch; discarded branches may overflow
            with np.errstate(all="ignore"):
                return fn(*args, *self.param_vals)
        return fn(*args, *self.param_vals)

    @property
    def has_partials(self):
        return True

    def partial(self, i, step=FD_STEP):
        params = dict(zip(self.param_syms, self.param_vals))
        return _Symbolic.make(_diff(self.expr, self.coords[i]), self.coords, params)

    def __repr__(self):
        return f"Symbolic({self.expr})"


# ---------------------------------------------------------------------------
# Differential forms
# ---------------------------------------------------------------------------


def _sort_sign(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Parity of the permutation sorting ``indices``; 0 on a repeated index."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    inversions = sum(1 for a, b in itertools.combinations(idx, 2) if a > b)
    return (-1 if inversions % 2 else 1), tuple(sorted(idx))


def _require_same_chart(*objs) -> "Chart":
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart != chart:
            raise ChartMismatchError(f"chart mismatch: {chart.axis_names} vs {o.chart.axis_names}")
    return chart


class DifferentialForm:
    """A degree-``k`` differential form on a chart.

    ``components`` maps strictly increasing index tuples to coefficient
    fields; the coefficient for ``I`` is the value of the form on the
    coordinate frame vectors ``(e_I[0], ..., e_I[k-1])``.  A form of degree
    ``dim + 1`` is allowed and is identically zero (it has no components).
    """

    def __init__(self, chart: Chart, degree: int, components: Mapping[tuple[int, ...], object] | None = None):
        if degree < 0:
            raise DegreeError(f"negative degree {degree}")
        if degree > chart.dim + 1:
            raise DegreeError(f"degree {degree} exceeds chart dimension {chart.dim}")
        comps: dict[tuple[int, ...], ScalarField] = {}
        for key, value in (components or {}).items():
            key = tuple(int(i) for i in key)
            if len(key) != degree or any(a >= b for a, b in zip(key, key[1:])):
                raise ValueError(f"component index {key} is not strictly increasing of length {degree}")
            if key and not (0 <= key[0] and key[-1] < chart.dim):
                raise ValueError(f"component index {key} out of range for dim {chart.dim}")
            field = as_field(value)
            if not _is_const(field, 0.0):
                comps[key] = field
        self.chart = chart
        self.degree = degree
        self._components = comps

    @property
    def components(self) -> Mapping[tuple[int, ...], ScalarField]:
        return dict(self._components)

    def component(self, key: Sequence[int]) -> ScalarField:
        return self._components.get(tuple(key), _ZERO)

    @property
    def tier(self) -> Tier:
        return Tier.FD if any(f.approximate for f in self._components.values()) else Tier.EXACT

    @property
    def has_partials(self) -> bool:
        return all(f.has_partials for f in self._components.values())

    def index_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.chart.dim), self.degree))

    def coefficients(self, points) -> np.ndarray:
        """Coefficients on all increasing index tuples, shape ``(..., C(dim, k))``."""
        pts = np.asarray(points, dtype=float)
        keys = self.index_tuples()
        out = np.zeros(pts.shape[:-1] + (len(keys),))
        for n, key in enumerate(keys):
            f = self._components.get(key)
            if f is not None:
                out[..., n] = f(pts)
        return out

    def dense(self, points) -> np.ndarray:
        """Full antisymmetric coefficient tensor, shape ``(...,) + (dim,) * k``."""
        pts = np.asarray(points, dtype=float)
        dim, k = self.chart.dim, self.degree
        out = np.zeros(pts.shape[:-1] + (dim,) * k)
        for key, f in self._components.items():
            value = f(pts)
            for perm in itertools.permutations(range(k)):
                sign, _ = _sort_sign(perm)
                out[(Ellipsis,) + tuple(key[p] for p in perm)] = sign * value
        return out

    def evaluate(self, point, vectors=()) -> float | np.ndarray:
        """Value of the form at ``point`` on ``vectors`` (a ``k``-list of vectors)."""
        return evaluate(self, point, vectors)

    def max_abs(self, points) -> float:
        if not self._components:
            return 0.0
        return float(np.max(np.abs(self.coefficients(points))))

    # algebra ---------------------------------------------------------------

    def _combine(self, other: "DifferentialForm", sign: float) -> "DifferentialForm":
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        _require_same_chart(self, other)
        if other.degree != self.degree:
            raise DegreeError(f"cannot add forms of degree {self.degree} and {other.degree}")
        keys = set(self._components) | set(other._components)
        comps = {
            k: linear_combination([(1.0, self.component(k)), (sign, other.component(k))]) for k in keys
        }
        return DifferentialForm(self.chart, self.degree, comps)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if isinstance(scalar, DifferentialForm):
            return NotImplemented
        f = as_field(scalar)
        return DifferentialForm(self.chart, self.degree, {k: product([f, v]) for k, v in self._components.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __repr__(self):
        names = self.chart.axis_names
        terms = ["∧".join("d" + names[i] for i in k) or "1" for k in sorted(self._components)]
        return f"DifferentialForm(degree={self.degree}, terms=[{', '.join(terms)}])"

    @classmethod
    def from_expressions(cls, chart: Chart, degree: int, exprs: Mapping, params: Mapping | None = None):
        """Form with sympy coefficients written in the chart's axis symbols."""
        coords = chart.symbols()
        return cls(chart, degree, {k: ScalarField.symbolic(e, coords, params) for k, e in exprs.items()})

    @classmethod
    def scalar(cls, chart: Chart, f) -> "DifferentialForm":
        return cls(chart, 0, {(): f})


def evaluate(a: DifferentialForm, point, vectors=()) -> float | np.ndarray:
    """Alternating multilinear value ``a_p(v_1, ..., v_k)``.

    ``point`` may be a single point or a batch; ``vectors`` has shape
    ``(k, dim)`` or ``(..., k, dim)``.  Raises :class:`DomainError` outside
    the chart.
    """
    pts = a.chart.require(point)
    vecs = np.asarray(vectors, dtype=float).reshape(np.shape(vectors)) if a.degree else None
    if a.degree == 0:
        val = a.component(())(pts)
    else:
        if vecs.shape[-2:] != (a.degree, a.chart.dim):
            raise ValueError(f"expected {a.degree} vectors of length {a.chart.dim}, got shape {vecs.shape}")
        val = np.zeros(np.broadcast_shapes(pts.shape[:-1], vecs.shape[:-2]))
        for key, f in a._components.items():
            minor = vecs[..., :, list(key)]
            val = val + f(pts) * np.linalg.det(minor)
    return float(val) if np.ndim(val) == 0 else val


def _collect(chart: Chart, degree: int, terms: Mapping[tuple[int, ...], list]) -> DifferentialForm:
    return DifferentialForm(chart, degree, {k: linear_combination(v) for k, v in terms.items()})


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    """Graded wedge product ``a ∧ b``."""
    chart = _require_same_chart(a, b)
    k = a.degree + b.degree
    if k > chart.dim:
        raise DegreeError(f"wedge of degrees {a.degree}+{b.degree} exceeds dimension {chart.dim}")
    terms: dict[tuple[int, ...], list] = defaultdict(list)
    for i_key, f in a._components.items():
        for j_key, g in b._components.items():
            sign, key = _sort_sign(i_key + j_key)
            if sign:
                terms[key].append((float(sign), product([f, g])))
    return _collect(chart, k, terms)


def exterior_derivative(a: DifferentialForm, step: float = FD_STEP) -> DifferentialForm:
    """``d a``; exact where the coefficients supply partials, else central FD.

    On a top-degree form the result is the zero form of degree ``dim + 1``.
    """
    chart = a.chart
    terms: dict[tuple[int, ...], list] = defaultdict(list)
    if a.degree >= chart.dim:
        return DifferentialForm(chart, a.degree + 1, {})
    for key, f in a._components.items():
        for i in range(chart.dim):
            if i in key:
                continue
            df = f.partial(i, step)
            if _is_const(df, 0.0):
                continue
            sign, new_key = _sort_sign((i,) + key)
            terms[new_key].append((float(sign), df))
    return _collect(chart, a.degree + 1, terms)


def interior_product(X: "VectorField", a: DifferentialForm) -> DifferentialForm:
    """``i_X a``, inserting ``X`` into the first slot."""
    chart = _require_same_chart(X, a)
    if a.degree < 1:
        raise DegreeError("interior product needs a form of degree >= 1")
    terms: dict[tuple[int, ...], list] = defaultdict(list)
    for key, f in a._components.items():
        for pos, i in enumerate(key):
            xi = X.components[i]
            if _is_const(xi, 0.0):
                continue
            terms[key[:pos] + key[pos + 1 :]].append((-1.0 if pos % 2 else 1.0, product([xi, f])))
    return _collect(chart, a.degree - 1, terms)


def lie_derivative(X: "VectorField", a: DifferentialForm, step: float = FD_STEP) -> DifferentialForm:
    """``L_X a = i_X da + d i_X a`` (Cartan)."""
    _require_same_chart(X, a)
    da = exterior_derivative(a, step)
    out = interior_product(X, da) if da.degree <= a.chart.dim else DifferentialForm(a.chart, a.degree, {})
    if a.degree >= 1:
        out = out + exterior_derivative(interior_product(X, a), step)
    return out


def pullback(m: "ChartMap", a: DifferentialForm, step: float = FD_STEP, validate_on=None) -> DifferentialForm:
    """``m* a`` on the source chart.

    When ``validate_on`` (source points) is given, the image of those points
    must lie in the target chart, otherwise :class:`DomainError` is raised.
    """
    if a.chart != m.target:
        raise ChartMismatchError(f"form lives on {a.chart.axis_names}, map targets {m.target.axis_names}")
    k = a.degree
    if k > m.source.dim:
        raise DegreeError(f"cannot pull back a {k}-form to a {m.source.dim}-chart")
    if validate_on is not None:
        m(validate_on, check=True)
    jac = [[g.partial(j, step) for j in range(m.source.dim)] for g in m.components]
    terms: dict[tuple[int, ...], list] = defaultdict(list)
    for i_key, f in a._components.items():
        pulled = _Composed(f, m.components)
        for j_key in itertools.combinations(range(m.source.dim), k):
            for perm in itertools.permutations(range(k)):
                entries = [jac[i_key[r]][j_key[perm[r]]] for r in range(k)]
                if any(_is_const(e, 0.0) for e in entries):
                    continue
                sign, _ = _sort_sign(perm)
                terms[j_key].append((float(sign), product([pulled, *entries])))
    return _collect(m.source, k, terms)


# ---------------------------------------------------------------------------
# Vector fields and chart maps
# ---------------------------------------------------------------------------


class VectorField:
    """Vector field on a chart given by ``dim`` component scalar fields."""

    def __init__(self, chart: Chart, components: Sequence, func: Callable | None = None):
        comps = tuple(as_field(c) for c in components)
        if len(comps) != chart.dim:
            raise ValueError(f"need {chart.dim} components, got {len(comps)}")
        self.chart = chart
        self.components = comps
        self._func = func

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self._func is not None:
            return np.asarray(self._func(pts), dtype=float)
        return np.stack([c(pts) for c in self.components], axis=-1)

    @property
    def tier(self) -> Tier:
        return Tier.FD if any(c.approximate for c in self.components) else Tier.EXACT

    @classmethod
    def from_function(cls, chart: Chart, func: Callable[[np.ndarray], np.ndarray]) -> "VectorField":
        """Field from a batched function returning ``(..., dim)``; partials by FD."""
        comps = [ScalarField(lambda p, i=i: func(p)[..., i]) for i in range(chart.dim)]
        return cls(chart, comps, func=func)

    @classmethod
    def coordinate(cls, chart: Chart, axis: str | int, scale: float = 1.0) -> "VectorField":
        i = chart.axis(axis)
        return cls(chart, [scale if j == i else 0.0 for j in range(chart.dim)])

    @classmethod
    def constant(cls, chart: Chart, vector: Sequence[float]) -> "VectorField":
        return cls(chart, [float(v) for v in vector])

    def __add__(self, other: "VectorField") -> "VectorField":
        _require_same_chart(self, other)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __mul__(self, scalar) -> "VectorField":
        f = as_field(scalar)
        return VectorField(self.chart, [product([f, c]) for c in self.components])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


class ChartMap:
    """Smooth map between charts given by target-coordinate component fields."""

    def __init__(self, source: Chart, target: Chart, components: Sequence):
        comps = tuple(as_field(c) for c in components)
        if len(comps) != target.dim:
            raise ValueError(f"need {target.dim} components, got {len(comps)}")
        self.source, self.target, self.components = source, target, comps

    @classmethod
    def from_function(
        cls,
        source: Chart,
        target: Chart,
        value: Callable[[np.ndarray], np.ndarray],
        jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> "ChartMap":
        """Map from a batched ``value`` and optional exact ``jacobian`` (``(..., dt, ds)``)."""
        comps = []
        for i in range(target.dim):
            partials = None
            if jacobian is not None:
                partials = [lambda p, i=i, j=j: jacobian(p)[..., i, j] for j in range(source.dim)]
            comps.append(ScalarField(lambda p, i=i: value(p)[..., i], partials))
        return cls(source, target, comps)

    @classmethod
    def from_expressions(cls, source: Chart, target: Chart, exprs: Sequence) -> "ChartMap":
        coords = source.symbols()
        return cls(source, target, [ScalarField.symbolic(e, coords) for e in exprs])

    @classmethod
    def identity(cls, chart: Chart) -> "ChartMap":
        return cls(chart, chart, [ScalarField.coordinate(i) for i in range(chart.dim)])

    def __call__(self, points, check: bool = False) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.stack([c(pts) for c in self.components], axis=-1)
        if check:
            inside = self.target.contains(out)
            if not np.all(inside):
                bad = pts.reshape(-1, self.source.dim)[~inside.reshape(-1)][0]
                raise DomainError(f"image of {bad} leaves target chart {self.target.axis_names}")
        return out

    def jacobian(self, points, step: float = FD_STEP) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.empty(pts.shape[:-1] + (self.target.dim, self.source.dim))
        for i, g in enumerate(self.components):
            for j in range(self.source.dim):
                out[..., i, j] = g.partial(j, step)(pts)
        return out

    def compose(self, inner: "ChartMap") -> "ChartMap":
        """``self ∘ inner``."""
        if inner.target != self.source:
            raise ChartMismatchError("inner map target differs from outer map source")
        return ChartMap(inner.source, self.target, [_Composed(g, inner.components) for g in self.components])
