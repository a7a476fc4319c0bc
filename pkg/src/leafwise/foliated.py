"""Foliated contact and symplectic structures on charts.

A codimension-one foliation is given by a 1-form ``beta`` (``TF = ker beta``).
A foliated contact structure is carried by an associated pair
``(beta, alpha)``: ``alpha`` cuts out an extension ``ker alpha`` whose
intersection with ``TF`` is the leafwise contact structure.

The distinguished transverse field ``T`` and Reeb field ``R`` solve

    alpha(T) = 0,  i_T dalpha = c alpha,  beta(T) = 1
    alpha(R) = 1,  i_R dalpha = c beta,   beta(R) = 0

pointwise.  Each system has ``dim + 2`` equations in ``dim + 1`` unknowns
(the vector and the proportionality scalar ``c``) and is solved by least
squares; the relative residual certifies consistency.
"""

from __future__ import annotations

import dataclasses
import functools
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from leafwise.errors import CertificationError, DegeneracyError, DegreeError, RankDeficiencyError
from leafwise.forms import (
    Chart,
    DifferentialForm,
    ScalarField,
    VectorField,
    exterior_derivative,
    lie_derivative,
    wedge,
)
from leafwise.reports import CheckReport, witness_of
from leafwise.tolerances import DEFAULT_TOLERANCES, GRID_CAP, GRID_POINTS, Tier, Tolerances

RCOND = 1e-10


def default_count(dim: int) -> int:
    """Per-axis default grid count, reduced so the total stays under the cap."""
    n = GRID_POINTS
    while n**dim > GRID_CAP:
        n -= 1
    return n


def grid_points(chart: Chart, grid=None) -> np.ndarray:
    """Normalise a grid argument: ``None``, a count, per-axis counts or explicit points."""
    if grid is None:
        return chart.grid(default_count(chart.dim))
    if isinstance(grid, (int, np.integer)) or (isinstance(grid, (tuple, list)) and all(isinstance(g, (int, np.integer)) for g in grid)):
        return chart.grid(grid)
    pts = np.asarray(grid, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != chart.dim:
        raise ValueError(f"explicit grid must have shape (N, {chart.dim}), got {pts.shape}")
    return pts


def _power(form: DifferentialForm, n: int) -> DifferentialForm:
    out = DifferentialForm.scalar(form.chart, 1.0)
    for _ in range(n):
        out = wedge(out, form)
    return out


def _top(form: DifferentialForm, points: np.ndarray) -> np.ndarray:
    if form.degree != form.chart.dim:
        raise DegreeError(f"expected a top-degree form, got degree {form.degree}")
    return form.component(tuple(range(form.chart.dim)))(points)


# ---------------------------------------------------------------------------
# Pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoliatedContactPair:
    """Associated pair ``(beta, alpha)`` with a reference volume form.

    ``orientation_form`` fixes the sign convention for the contact condition:
    the pair is positive where ``alpha ∧ dalpha^n ∧ beta`` is a positive
    multiple of it.  When omitted the coordinate volume form is used.
    ``certificate`` holds the verifier report of a certified pair.
    """

    chart: Chart
    beta: DifferentialForm
    alpha: DifferentialForm
    orientation_form: DifferentialForm | None = None
    certificate: CheckReport | None = None
    name: str = ""

    def __post_init__(self):
        for label, form, deg in (("beta", self.beta, 1), ("alpha", self.alpha, 1)):
            if form.chart != self.chart:
                raise ValueError(f"{label} lives on a different chart")
            if form.degree != deg:
                raise DegreeError(f"{label} must be a {deg}-form")
        if self.chart.dim % 2:
            raise ValueError("a foliated contact pair needs an even-dimensional chart")
        if self.orientation_form is None:
            object.__setattr__(self, "orientation_form", self.chart.volume_form())
        elif self.orientation_form.degree != self.chart.dim or self.orientation_form.chart != self.chart:
            raise DegreeError("orientation_form must be a top-degree form on the pair's chart")

    @functools.cached_property
    def dalpha(self) -> DifferentialForm:
        return exterior_derivative(self.alpha)

    @functools.cached_property
    def contact_volume(self) -> DifferentialForm:
        """``alpha ∧ dalpha^n ∧ beta`` with ``dim = 2n + 2``."""
        n = (self.chart.dim - 2) // 2
        return wedge(wedge(self.alpha, _power(self.dalpha, n)), self.beta)

    @property
    def certified(self) -> bool:
        return self.certificate is not None and self.certificate.passed

    def certify(self, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> "FoliatedContactPair":
        """Run :func:`verify_contact_foliation` and embed the report.

        Raises :class:`CertificationError` if the check fails.
        """
        report = verify_contact_foliation(self, grid, tol)
        if not report.passed:
            raise CertificationError(f"pair {self.name or '<unnamed>'} is not foliated contact", report)
        return dataclasses.replace(self, certificate=report)

    def xi_basis(self, points) -> np.ndarray:
        """Orthonormal basis of ``ker alpha ∩ ker beta``, shape ``(..., dim, dim - 2)``."""
        pts = np.asarray(points, dtype=float)
        rows = np.stack([self.alpha.coefficients(pts), self.beta.coefficients(pts)], axis=-2)
        return _null_space(rows, 2)

    def theta_basis(self, points) -> np.ndarray:
        """Orthonormal basis of ``ker alpha``, shape ``(..., dim, dim - 1)``."""
        pts = np.asarray(points, dtype=float)
        return _null_space(self.alpha.coefficients(pts)[..., None, :], 1)


@dataclass(frozen=True)
class SymplecticFoliationPair:
    """Defining form ``beta`` with a 2-form ``omega_ext`` extending the leafwise form."""

    chart: Chart
    beta: DifferentialForm
    omega_ext: DifferentialForm
    certificate: CheckReport | None = None
    name: str = ""

    def __post_init__(self):
        if self.beta.chart != self.chart or self.omega_ext.chart != self.chart:
            raise ValueError("forms live on a different chart")
        if self.beta.degree != 1 or self.omega_ext.degree != 2:
            raise DegreeError("need a 1-form beta and a 2-form omega_ext")
        if self.chart.dim % 2 == 0:
            raise ValueError("a symplectic foliation needs an odd-dimensional chart")

    @property
    def n(self) -> int:
        return (self.chart.dim - 1) // 2

    @functools.cached_property
    def leaf_volume(self) -> DifferentialForm:
        """``Omega^n ∧ beta``."""
        return wedge(_power(self.omega_ext, self.n), self.beta)

    @property
    def certified(self) -> bool:
        return self.certificate is not None and self.certificate.passed

    def certify(self, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> "SymplecticFoliationPair":
        report = verify_symplectic_foliation(self, grid, tol)
        if not report.passed:
            raise CertificationError(f"pair {self.name or '<unnamed>'} is not strong symplectic", report)
        return dataclasses.replace(self, certificate=report)


@dataclass(frozen=True)
class LeafContactForm:
    """A contact form ``alpha`` on a single odd-dimensional leaf chart."""

    chart: Chart
    alpha: DifferentialForm
    certificate: CheckReport | None = None
    name: str = ""

    def __post_init__(self):
        if self.alpha.chart != self.chart or self.alpha.degree != 1:
            raise DegreeError("alpha must be a 1-form on the leaf chart")
        if self.chart.dim % 2 == 0:
            raise ValueError("a leaf contact form needs an odd-dimensional chart")

    @functools.cached_property
    def dalpha(self) -> DifferentialForm:
        return exterior_derivative(self.alpha)

    @functools.cached_property
    def contact_volume(self) -> DifferentialForm:
        return wedge(self.alpha, _power(self.dalpha, (self.chart.dim - 1) // 2))

    @property
    def certified(self) -> bool:
        return self.certificate is not None and self.certificate.passed

    def certify(self, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> "LeafContactForm":
        report = verify_leaf_contact(self, grid, tol)
        if not report.passed:
            raise CertificationError(f"form {self.name or '<unnamed>'} is not contact", report)
        return dataclasses.replace(self, certificate=report)


def leaf_orientation(chart: Chart, beta: DifferentialForm, leaf_axes) -> DifferentialForm:
    """``d(leaf_axes[0]) ∧ ... ∧ beta``: leaf volume followed by the conormal."""
    out = DifferentialForm.scalar(chart, 1.0)
    for axis in leaf_axes:
        out = wedge(out, chart.d(axis))
    return wedge(out, beta)


def _null_space(rows: np.ndarray, rank: int) -> np.ndarray:
    _, _, vt = np.linalg.svd(rows, full_matrices=True)
    return np.swapaxes(vt[..., rank:, :], -1, -2)


# ---------------------------------------------------------------------------
# Grid verifiers
# ---------------------------------------------------------------------------


def _require_nonvanishing(values: np.ndarray, points: np.ndarray, what: str, tol: float) -> None:
    norms = np.linalg.norm(values.reshape(len(points), -1), axis=-1)
    bad = np.flatnonzero(norms <= tol)
    if bad.size:
        raise DegeneracyError(f"{what} vanishes on the grid", witness_of(points, bad[0]))


def check_frobenius(beta: DifferentialForm, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """Integrability of ``ker beta``: max over the grid of ``|beta ∧ dbeta|`` on the frame."""
    if beta.degree != 1:
        raise DegreeError("check_frobenius expects a 1-form")
    pts = grid_points(beta.chart, grid)
    _require_nonvanishing(beta.coefficients(pts), pts, "beta", tol.positivity)
    chart = beta.chart
    if chart.dim < 3:
        integrability = DifferentialForm(chart, 3, {})
    else:
        integrability = wedge(beta, exterior_derivative(beta, tol.fd_step))
    tier = Tier.combine(beta.tier, integrability.tier, Tier.EXACT if beta.has_partials else Tier.FD)
    coeffs = integrability.coefficients(pts).reshape(len(pts), -1)
    per_point = np.max(np.abs(coeffs), axis=-1) if coeffs.shape[-1] else np.zeros(len(pts))
    worst = int(np.argmax(per_point))
    value = float(per_point[worst])
    threshold = tol.for_tier(tier)
    passed = value < threshold
    return CheckReport(
        name="frobenius",
        passed=passed,
        tier=tier,
        metric="max |beta^dbeta|",
        value=value,
        tolerance=threshold,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
    )


def verify_contact_foliation(pair: FoliatedContactPair, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """Positivity of ``alpha ∧ dalpha^n ∧ beta`` against the orientation form.

    Raises :class:`DegeneracyError` if ``beta`` or ``alpha ∧ beta`` vanishes
    at a grid point; otherwise returns a report whose value is the minimum
    ratio, failing (with a witness) where the ratio is at most the
    positivity margin.
    """
    pts = grid_points(pair.chart, grid)
    _require_nonvanishing(pair.beta.coefficients(pts), pts, "beta", tol.positivity)
    _require_nonvanishing(wedge(pair.alpha, pair.beta).coefficients(pts), pts, "alpha^beta", tol.positivity)
    reference = _top(pair.orientation_form, pts)
    if np.any(reference == 0):
        raise DegeneracyError("orientation form vanishes", witness_of(pts, int(np.flatnonzero(reference == 0)[0])))
    ratio = _top(pair.contact_volume, pts) / reference
    tier = Tier.combine(pair.alpha.tier, pair.beta.tier, Tier.EXACT if pair.alpha.has_partials else Tier.FD)
    worst = int(np.argmin(ratio))
    value = float(ratio[worst])
    passed = value > tol.positivity
    return CheckReport(
        name="contact",
        passed=passed,
        tier=tier,
        metric="min ratio alpha^dalpha^beta / orientation",
        value=value,
        tolerance=tol.positivity,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={"max_ratio": float(np.max(ratio))},
    )


def verify_leaf_contact(form: LeafContactForm, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """Positivity of ``alpha ∧ dalpha^n`` against the coordinate volume of the leaf chart."""
    pts = grid_points(form.chart, grid)
    _require_nonvanishing(form.alpha.coefficients(pts), pts, "alpha", tol.positivity)
    ratio = _top(form.contact_volume, pts)
    tier = Tier.combine(form.alpha.tier, Tier.EXACT if form.alpha.has_partials else Tier.FD)
    worst = int(np.argmin(ratio))
    value = float(ratio[worst])
    passed = value > tol.positivity
    return CheckReport(
        name="leaf_contact",
        passed=passed,
        tier=tier,
        metric="min alpha^dalpha^n / volume",
        value=value,
        tolerance=tol.positivity,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={"max_ratio": float(np.max(ratio))},
    )


def solve_leaf_reeb(form: LeafContactForm, p) -> PointSolve:
    """Reeb field of a leaf contact form: ``alpha(R) = 1``, ``i_R dalpha = 0``."""
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts2 = pts.reshape(-1, form.chart.dim)
    dim = form.chart.dim
    A = np.zeros((len(pts2), dim + 1, dim))
    rhs = np.zeros((len(pts2), dim + 1))
    A[:, 0, :] = form.alpha.coefficients(pts2)
    A[:, 1:, :] = np.swapaxes(form.dalpha.dense(pts2), -1, -2)
    rhs[:, 0] = 1.0
    x, resid, cond = solve_batched(A, rhs, pts2)
    if single:
        return PointSolve(x[0], None, float(resid[0]), float(cond[0]))
    lead = pts.shape[:-1]
    return PointSolve(x.reshape(lead + (dim,)), None, resid.reshape(lead), cond.reshape(lead))


def verify_symplectic_foliation(pair: SymplecticFoliationPair, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """Closedness ``dOmega = 0`` and leafwise nondegeneracy ``Omega^n ∧ beta != 0``."""
    pts = grid_points(pair.chart, grid)
    _require_nonvanishing(pair.beta.coefficients(pts), pts, "beta", tol.positivity)
    d_omega = exterior_derivative(pair.omega_ext, tol.fd_step)
    tier = Tier.combine(d_omega.tier, Tier.EXACT if pair.omega_ext.has_partials else Tier.FD)
    closed = d_omega.coefficients(pts).reshape(len(pts), -1)
    closed_per_point = np.max(np.abs(closed), axis=-1) if closed.shape[-1] else np.zeros(len(pts))
    volume = np.abs(_top(pair.leaf_volume, pts))
    closed_tol = tol.for_tier(tier)
    closed_ok = closed_per_point < closed_tol
    nondeg_ok = volume > tol.positivity
    ok = closed_ok & nondeg_ok
    passed = bool(np.all(ok))
    worst = int(np.argmax(~ok)) if not passed else int(np.argmax(closed_per_point))
    return CheckReport(
        name="symplectic",
        passed=passed,
        tier=tier,
        metric="max |dOmega|",
        value=float(np.max(closed_per_point)),
        tolerance=closed_tol,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={
            "min_abs_leaf_volume": float(np.min(volume)),
            "closed": bool(np.all(closed_ok)),
            "nondegenerate": bool(np.all(nondeg_ok)),
        },
    )


# ---------------------------------------------------------------------------
# Pointwise solvers
# ---------------------------------------------------------------------------


class PointSolve(NamedTuple):
    """Solution of a pointwise system (batched over leading axes)."""

    vector: np.ndarray
    scalar: np.ndarray | float | None
    residual: np.ndarray | float
    condition: np.ndarray | float


def solve_batched(A: np.ndarray, b: np.ndarray, points: np.ndarray, rcond: float = RCOND):
    """Least-squares solve of a stack of small systems by SVD.

    Returns ``(x, relative_residual, condition_number)``; the residual is
    absolute where the right-hand side vanishes.  Raises
    :class:`RankDeficiencyError` at the first point where the smallest
    singular value falls below ``rcond`` times the largest.
    """
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    deficient = s[..., -1] <= rcond * s[..., 0]
    if np.any(deficient):
        flat = np.flatnonzero(deficient.reshape(-1))[0]
        raise RankDeficiencyError(
            "pointwise system is rank deficient", np.asarray(points).reshape(-1, points.shape[-1])[flat]
        )
    coeffs = np.einsum("...ji,...j->...i", u, b) / s
    x = np.einsum("...ji,...j->...i", vt, coeffs)
    scale = np.linalg.norm(b, axis=-1)
    resid = np.linalg.norm(np.einsum("...ij,...j->...i", A, x) - b, axis=-1) / np.where(scale > 0, scale, 1.0)
    return x, resid, s[..., 0] / s[..., -1]


def _pair_arrays(pair: FoliatedContactPair, pts: np.ndarray):
    return pair.alpha.coefficients(pts), pair.beta.coefficients(pts), pair.dalpha.dense(pts)


def _field_system(a, b, W, kind: str):
    """Assemble the transverse/Reeb system; unknowns are ``(v, c)``."""
    dim = a.shape[-1]
    shape = a.shape[:-1]
    A = np.zeros(shape + (dim + 2, dim + 1))
    rhs = np.zeros(shape + (dim + 2,))
    A[..., 0, :dim] = a
    A[..., 1, :dim] = b
    # dalpha(v, e_j) - c * (alpha or beta)_j = 0
    A[..., 2:, :dim] = np.swapaxes(W, -1, -2)
    A[..., 2:, dim] = -(a if kind == "transverse" else b)
    if kind == "transverse":
        rhs[..., 1] = 1.0
    else:
        rhs[..., 0] = 1.0
    return A, rhs


def _solve_field(pair: FoliatedContactPair, points, kind: str) -> PointSolve:
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts2 = pts.reshape(-1, pair.chart.dim)
    A, rhs = _field_system(*_pair_arrays(pair, pts2), kind)
    x, resid, cond = solve_batched(A, rhs, pts2)
    vec, c = x[:, :-1], x[:, -1]
    if single:
        return PointSolve(vec[0], float(c[0]), float(resid[0]), float(cond[0]))
    lead = pts.shape[:-1]
    return PointSolve(vec.reshape(lead + (-1,)), c.reshape(lead), resid.reshape(lead), cond.reshape(lead))


def solve_transverse_field(pair: FoliatedContactPair, p) -> PointSolve:
    """Solve ``alpha(T) = 0, beta(T) = 1, i_T dalpha = c alpha`` at ``p`` (or a batch)."""
    return _solve_field(pair, p, "transverse")


def solve_reeb_field(pair: FoliatedContactPair, p) -> PointSolve:
    """Solve ``alpha(R) = 1, beta(R) = 0, i_R dalpha = c beta`` at ``p`` (or a batch)."""
    return _solve_field(pair, p, "reeb")


class _SolvedField:
    """Batched pointwise solver memoised on recent point arrays.

    The memo only short-circuits recomputation of a pure function.
    """

    def __init__(self, solve: Callable[[np.ndarray], np.ndarray], size: int = 32):
        self._solve = solve
        self._memo: OrderedDict = OrderedDict()
        self._size = size
        self._lock = threading.Lock()

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(pts, dtype=float)
        key = (pts.shape, hash(pts.tobytes()))
        with self._lock:
            hit = self._memo.get(key)
            if hit is not None:
                self._memo.move_to_end(key)
                return hit
        out = self._solve(pts)
        out.setflags(write=False)
        with self._lock:
            self._memo[key] = out
            if len(self._memo) > self._size:
                self._memo.popitem(last=False)
        return out


def _solved_vector_field(chart: Chart, solve: Callable[[np.ndarray], np.ndarray]):
    """Vector field (first ``dim`` outputs) and scalar field (last output) of a solver."""
    memo = _SolvedField(solve)
    dim = chart.dim
    comps = [ScalarField(lambda p, i=i: memo(p)[..., i]) for i in range(dim)]
    field = VectorField(chart, comps, func=lambda p: memo(p)[..., :dim])
    scalar = ScalarField(lambda p: memo(p)[..., dim])
    return field, scalar


def _stacked(pair, kind):
    def solve(pts):
        sol = _solve_field(pair, pts.reshape(-1, pair.chart.dim), kind)
        out = np.concatenate([sol.vector, np.asarray(sol.scalar)[:, None]], axis=-1)
        return out.reshape(pts.shape[:-1] + (pair.chart.dim + 1,))

    return solve


def transverse_field(pair: FoliatedContactPair) -> VectorField:
    """The transverse field ``T`` as a vector field solved on demand."""
    return _solved_vector_field(pair.chart, _stacked(pair, "transverse"))[0]


def reeb_field(pair: FoliatedContactPair) -> VectorField:
    """The Reeb field ``R`` as a vector field solved on demand."""
    return _solved_vector_field(pair.chart, _stacked(pair, "reeb"))[0]


@dataclass(frozen=True)
class FieldSolveReport:
    """Grid solve of ``T`` or ``R`` with residual and conditioning data.

    ``field`` evaluates the pointwise solver anywhere on the chart (no
    interpolation); the arrays hold the values at ``points``.
    """

    kind: str
    field: VectorField
    proportionality: ScalarField
    points: np.ndarray
    values: np.ndarray
    scalars: np.ndarray
    residuals: np.ndarray
    conditions: np.ndarray
    frame_determinants: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def max_condition(self) -> float:
        return float(np.max(self.conditions))

    @property
    def min_frame_determinant(self) -> float:
        return float(np.min(np.abs(self.frame_determinants)))


def solve_on_grid(pair: FoliatedContactPair, kind: str = "transverse", grid=None) -> FieldSolveReport:
    """Solve ``T`` (``kind="transverse"``) or ``R`` (``kind="reeb"``) over a grid."""
    if kind not in ("transverse", "reeb"):
        raise ValueError(f"unknown field kind {kind!r}")
    pts = grid_points(pair.chart, grid)
    sol = _solve_field(pair, pts, kind)
    other = _solve_field(pair, pts, "reeb" if kind == "transverse" else "transverse")
    T, R = (sol.vector, other.vector) if kind == "transverse" else (other.vector, sol.vector)
    field, scalar = _solved_vector_field(pair.chart, _stacked(pair, kind))
    return FieldSolveReport(
        kind=kind,
        field=field,
        proportionality=scalar,
        points=pts,
        values=sol.vector,
        scalars=np.asarray(sol.scalar),
        residuals=np.asarray(sol.residual),
        conditions=np.asarray(sol.condition),
        frame_determinants=frame_determinant(pair, pts, T, R),
    )


def frame_determinant(pair: FoliatedContactPair, points, T=None, R=None) -> np.ndarray:
    """``det [xi basis, R, T]``; bounded away from zero where the splitting holds."""
    pts = np.asarray(points, dtype=float)
    if T is None:
        T = solve_transverse_field(pair, pts).vector
    if R is None:
        R = solve_reeb_field(pair, pts).vector
    frame = np.concatenate([pair.xi_basis(pts), np.asarray(R)[..., :, None], np.asarray(T)[..., :, None]], axis=-1)
    return np.linalg.det(frame)


def verify_parallel_identity(pair: FoliatedContactPair, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """Check ``L_T alpha = dalpha(T, R) alpha`` on the coordinate frame.

    ``T`` is evaluated through the pointwise solver, so ``L_T alpha`` uses
    finite differences and the check runs at the FD tier.
    """
    pts = grid_points(pair.chart, grid)
    T = transverse_field(pair)
    R = reeb_field(pair)
    lhs = lie_derivative(T, pair.alpha, tol.fd_step).coefficients(pts)
    W = pair.dalpha.dense(pts)
    c = np.einsum("ni,nij,nj->n", T(pts), W, R(pts))
    rhs = c[:, None] * pair.alpha.coefficients(pts)
    per_point = np.max(np.abs(lhs - rhs), axis=-1)
    worst = int(np.argmax(per_point))
    value = float(per_point[worst])
    passed = value < tol.fd
    return CheckReport(
        name="parallel",
        passed=passed,
        tier=Tier.FD,
        metric="max |L_T alpha - dalpha(T,R) alpha|",
        value=value,
        tolerance=tol.fd,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={"max_abs_lie": float(np.max(np.abs(lhs))), "max_abs_rhs": float(np.max(np.abs(rhs)))},
    )


# ---------------------------------------------------------------------------
# Symplectic side
# ---------------------------------------------------------------------------


def _symplectic_transverse(pair: SymplecticFoliationPair, points) -> PointSolve:
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts2 = pts.reshape(-1, pair.chart.dim)
    dim = pair.chart.dim
    W = pair.omega_ext.dense(pts2)
    A = np.zeros((len(pts2), dim + 1, dim))
    rhs = np.zeros((len(pts2), dim + 1))
    A[:, :dim, :] = np.swapaxes(W, -1, -2)
    A[:, dim, :] = pair.beta.coefficients(pts2)
    rhs[:, dim] = 1.0
    x, resid, cond = solve_batched(A, rhs, pts2)
    if single:
        return PointSolve(x[0], None, float(resid[0]), float(cond[0]))
    lead = pts.shape[:-1]
    return PointSolve(x.reshape(lead + (dim,)), None, resid.reshape(lead), cond.reshape(lead))


def solve_symplectic_transverse(pair: SymplecticFoliationPair, p) -> PointSolve:
    """Solve ``i_T Omega = 0, beta(T) = 1`` at ``p`` (or a batch)."""
    return _symplectic_transverse(pair, p)


def symplectic_transverse_field(pair: SymplecticFoliationPair) -> VectorField:
    def solve(pts):
        return _symplectic_transverse(pair, pts).vector

    memo = _SolvedField(solve)
    dim = pair.chart.dim
    return VectorField(pair.chart, [ScalarField(lambda p, i=i: memo(p)[..., i]) for i in range(dim)], func=memo)


def verify_symplectic_parallel(pair: SymplecticFoliationPair, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
    """``L_T Omega = 0`` for the symplectic transverse field (FD tier)."""
    pts = grid_points(pair.chart, grid)
    T = symplectic_transverse_field(pair)
    lie = lie_derivative(T, pair.omega_ext, tol.fd_step).coefficients(pts)
    per_point = np.max(np.abs(lie), axis=-1)
    worst = int(np.argmax(per_point))
    value = float(per_point[worst])
    passed = value < tol.fd
    return CheckReport(
        name="symplectic_parallel",
        passed=passed,
        tier=Tier.FD,
        metric="max |L_T Omega|",
        value=value,
        tolerance=tol.fd,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
    )


# ---------------------------------------------------------------------------
# Radial bounds for the local normal form dz + f dtheta
# ---------------------------------------------------------------------------


def verify_radial_bounds(
    f: ScalarField,
    delta: float,
    chart: Chart,
    grid=None,
    r_axis: str = "r",
    t_axis: str | None = "t",
    t_range: tuple[float, float] | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CheckReport:
    """Check ``d_r f > 2 delta r`` and ``f > delta r^2`` at grid points with ``r > 0``.

    Only points whose ``t`` coordinate lies in ``t_range`` (when given) are
    checked.  The report value is the smallest margin over both bounds; a
    negative value is the largest violation.
    """
    pts = grid_points(chart, grid)
    ri = chart.axis(r_axis)
    keep = pts[:, ri] > 0
    if t_range is not None and t_axis is not None:
        ti = chart.axis(t_axis)
        keep &= (pts[:, ti] >= t_range[0]) & (pts[:, ti] <= t_range[1])
    pts = pts[keep]
    r = pts[:, ri]
    df = f.partial(ri, tol.fd_step)
    tier = Tier.combine(f.tier, df.tier)
    derivative_margin = df(pts) - 2.0 * delta * r
    value_margin = f(pts) - delta * r**2
    margin = np.minimum(derivative_margin, value_margin)
    worst = int(np.argmin(margin))
    value = float(margin[worst])
    passed = value > 0
    return CheckReport(
        name="radial_bounds",
        passed=passed,
        tier=tier,
        metric="min margin of d_r f - 2 delta r, f - delta r^2",
        value=value,
        tolerance=0.0,
        grid_points=len(pts),
        witness=None if passed else witness_of(pts, worst),
        details={
            "delta": float(delta),
            "min_derivative_margin": float(np.min(derivative_margin)),
            "min_value_margin": float(np.min(value_margin)),
            "derivative_bound_holds": bool(np.all(derivative_margin > 0)),
            "value_bound_holds": bool(np.all(value_margin > 0)),
        },
    )
