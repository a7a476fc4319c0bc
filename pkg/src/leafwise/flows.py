"""Flows of vector fields: fixed-step RK4, contact-connection transport and Gray flows.

Flow differentials ``Dφ`` are estimated from nearby trajectories started at
``p ± h e_i``.  All trajectories of one run are advanced together as a batch,
so the offset trajectories see exactly the same time stepping as the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from leafwise.errors import CertificationError, DegreeError
from leafwise.forms import (
    Chart,
    ChartMap,
    DifferentialForm,
    ScalarField,
    VectorField,
    exterior_derivative,
    pullback,
)
from leafwise.foliated import (
    FoliatedContactPair,
    LeafContactForm,
    solve_batched,
    transverse_field,
    verify_contact_foliation,
)
from leafwise.reports import CheckReport
from leafwise.tolerances import DEFAULT_TOLERANCES, Tier, Tolerances

DEFAULT_STEP = 1e-3
DIFFERENTIAL_OFFSET = 1e-5
PARAM_AXIS = "param"


# ---------------------------------------------------------------------------
# Trajectories and RK4
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples of one integral curve.

    ``times`` has shape ``(n,)`` and ``points`` shape ``(n, dim)``.  When the
    curve left a bounded chart, ``exited`` is set and the samples stop at the
    last point inside.
    """

    times: np.ndarray
    points: np.ndarray
    step: float
    method: str = "rk4"
    exited: bool = False

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.times.tolist(), self.points))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @property
    def end_time(self) -> float:
        return float(self.times[-1])


def time_grid(t_end: float, step: float, t_start: float = 0.0) -> np.ndarray:
    """Times ``t_start + k step`` up to ``t_end``; the last interval may be shorter."""
    if step <= 0:
        raise ValueError("step must be positive")
    span = t_end - t_start
    if span < 0:
        raise ValueError("t_end must not precede the start time")
    n = int(math.ceil(span / step - 1e-9))
    times = t_start + step * np.arange(n + 1)
    times[-1] = t_end
    return times


def rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: np.ndarray,
    post: Callable[[np.ndarray], np.ndarray] | None = None,
    inside: Callable[[np.ndarray], bool] | None = None,
    observe: Callable[[int, float, np.ndarray], None] | None = None,
):
    """Classical RK4 over the given time grid.

    ``post`` is applied after each step (periodic wrapping); ``inside``
    stops the integration when it returns false.  ``observe(k, t, y)`` runs
    right after the first stage of step ``k``, i.e. at every accepted state.
    Returns the accepted states (shape ``(k, *y0.shape)``) and an exit flag.
    """
    y = np.array(y0, dtype=float)
    states = [y.copy()]
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = rhs(t, y)
        if observe is not None:
            observe(k, t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post is not None:
            y_new = post(y_new)
        if inside is not None and not inside(y_new):
            return np.stack(states), True
        y = y_new
        states.append(y.copy())
    return np.stack(states), False


def _integrate_points(chart: Chart, velocity, p0: np.ndarray, times: np.ndarray):
    """RK4 for a batch of points ``(m, dim)`` under ``velocity(t, points)``."""
    return rk4(
        velocity,
        p0,
        times,
        post=chart.wrap,
        inside=lambda y: bool(np.all(chart.contains(y))),
    )


def integrate_flow(X: VectorField, p0, t_end: float, step: float = DEFAULT_STEP) -> Trajectory:
    """Integrate the autonomous field ``X`` from ``p0`` for time ``t_end``."""
    chart = X.chart
    start = chart.require(np.asarray(p0, dtype=float))
    times = time_grid(t_end, step)
    states, exited = _integrate_points(chart, lambda t, y: X(y), start[None, :], times)
    return Trajectory(times[: len(states)], states[:, 0, :], float(step), exited=exited)


# ---------------------------------------------------------------------------
# Kernels and flow differentials
# ---------------------------------------------------------------------------


def offset_cloud(p: np.ndarray, offset: float) -> np.ndarray:
    """``p`` followed by ``p + h e_i`` and ``p - h e_i`` for each axis: ``(2 dim + 1, dim)``."""
    dim = len(p)
    eye = offset * np.eye(dim)
    return np.concatenate([p[None, :], p + eye, p - eye], axis=0)


def cloud_differential(chart: Chart, cloud: np.ndarray, offset: float) -> np.ndarray:
    """Central-difference ``Dφ`` from the images of an :func:`offset_cloud`."""
    dim = chart.dim
    plus, minus = cloud[1 : dim + 1], cloud[dim + 1 :]
    return (chart.displacement(plus, minus) / (2.0 * offset)).T


def kernel_basis(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the common kernel of the given covectors."""
    rows = np.atleast_2d(rows)
    _, _, vt = np.linalg.svd(rows, full_matrices=True)
    return vt[rows.shape[0] :].T


def subspace_defect(basis: np.ndarray, target: np.ndarray) -> float:
    """Sine of the largest principal angle between ``span(basis)`` and ``span(target)``.

    ``target`` must be orthonormal; ``basis`` is orthonormalised here.
    """
    q, _ = np.linalg.qr(basis)
    residual = q - target @ (target.T @ q)
    return float(min(1.0, np.linalg.norm(residual, 2)))


# ---------------------------------------------------------------------------
# Parallel transport along the contact connection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportReport:
    """Alignment of ``Dφ_s(ker alpha)`` with ``ker alpha`` along a transport."""

    times: np.ndarray
    defects: np.ndarray
    fd_offset: float
    exited: bool

    @property
    def max_defect(self) -> float:
        return float(np.max(self.defects)) if len(self.defects) else 0.0

    def to_check(self, tol: Tolerances = DEFAULT_TOLERANCES) -> CheckReport:
        passed = self.max_defect < tol.fd and not self.exited
        return CheckReport(
            name="transport",
            passed=passed,
            tier=Tier.FD,
            metric="max sin angle(ker alpha, Dphi ker alpha)",
            value=self.max_defect,
            tolerance=tol.fd,
            grid_points=len(self.times),
            details={"fd_offset": self.fd_offset, "exited": self.exited},
        )


def parallel_transport(
    pair: FoliatedContactPair,
    p0,
    t_end: float,
    step: float = DEFAULT_STEP,
    fd_offset: float = DIFFERENTIAL_OFFSET,
    sample_every: int = 1,
) -> tuple[Trajectory, TransportReport]:
    """Flow ``p0`` along the solved transverse field ``T``.

    The report records, every ``sample_every`` steps, the sine of the largest
    principal angle between ``ker alpha`` at ``φ_s(p0)`` and the image of
    ``ker alpha`` at ``p0`` under the finite-difference flow differential.
    """
    chart = pair.chart
    start = chart.require(np.asarray(p0, dtype=float))
    T = transverse_field(pair)
    cloud0 = offset_cloud(start, fd_offset)
    theta0 = kernel_basis(pair.alpha.coefficients(start))
    times = time_grid(t_end, step)
    states, exited = _integrate_points(chart, lambda t, y: T(y), cloud0, times)
    sample_times, defects = [], []
    for k in range(0, len(states), sample_every):
        cloud = states[k]
        D = cloud_differential(chart, cloud, fd_offset)
        theta = kernel_basis(pair.alpha.coefficients(cloud[0]))
        sample_times.append(times[k])
        defects.append(subspace_defect(D @ theta0, theta))
    traj = Trajectory(times[: len(states)], states[:, 0, :], float(step), exited=exited)
    report = TransportReport(np.asarray(sample_times), np.asarray(defects), float(fd_offset), exited)
    return traj, report


# ---------------------------------------------------------------------------
# Smooth families of contact pairs
# ---------------------------------------------------------------------------


def parameter_chart(chart: Chart, s_range: tuple[float, float]) -> Chart:
    """``[s0, s1] × chart`` with the parameter as axis 0."""
    param = Chart((PARAM_AXIS,), (None,), (tuple(float(v) for v in s_range),))
    return param.product(chart)


def _slice_map(chart: Chart, ext: Chart, s: float) -> ChartMap:
    comps = [ScalarField.constant(s)] + [ScalarField.coordinate(i) for i in range(chart.dim)]
    return ChartMap(chart, ext, comps)


class ContactFamily:
    """A smooth family ``alpha_s`` of 1-forms with a common foliation ``beta``.

    The family is stored as one 1-form on ``[s0, s1] × chart`` without a
    ``d(param)`` component; ``alpha_s`` is its restriction to the slice and
    ``dalpha_s/ds`` its partial along the parameter axis (exact when the
    coefficients are).
    """

    def __init__(self, chart: Chart, beta: DifferentialForm, alpha_ext: DifferentialForm, s_range=(0.0, 1.0), name: str = "", orientation_form: DifferentialForm | None = None):
        ext = parameter_chart(chart, s_range)
        if alpha_ext.chart != ext or alpha_ext.degree != 1:
            raise DegreeError("alpha_ext must be a 1-form on the parameter chart")
        if any(0 in key for key in alpha_ext.components):
            raise ValueError("alpha_ext must not have a d(param) component")
        if beta.chart != chart or beta.degree != 1:
            raise DegreeError("beta must be a 1-form on the chart")
        self.chart, self.beta, self.alpha_ext = chart, beta, alpha_ext
        self.ext_chart = ext
        self.s_range = tuple(float(v) for v in s_range)
        self.name = name
        self.orientation_form = orientation_form
        dim = chart.dim
        self._alpha = [alpha_ext.component((i + 1,)) for i in range(dim)]
        self._alpha_dot = [f.partial(0) for f in self._alpha]
        self._dalpha = {}
        for i in range(dim):
            for j in range(i + 1, dim):
                self._dalpha[(i, j)] = self._alpha[j].partial(i + 1) - self._alpha[i].partial(j + 1)

    @classmethod
    def from_expressions(cls, chart: Chart, beta: DifferentialForm, exprs, s_range=(0.0, 1.0), name: str = "", orientation_form=None):
        """Family with sympy coefficients in the chart symbols and ``param``."""
        ext = parameter_chart(chart, s_range)
        shifted = {tuple(i + 1 for i in key): e for key, e in exprs.items()}
        return cls(chart, beta, DifferentialForm.from_expressions(ext, 1, shifted), s_range, name, orientation_form)

    @classmethod
    def constant(cls, pair: FoliatedContactPair, s_range=(0.0, 1.0)) -> "ContactFamily":
        ext = parameter_chart(pair.chart, s_range)
        drop = ChartMap(ext, pair.chart, [ScalarField.coordinate(i + 1) for i in range(pair.chart.dim)])
        return cls(pair.chart, pair.beta, pullback(drop, pair.alpha), s_range, pair.name, pair.orientation_form)

    @property
    def tier(self) -> Tier:
        return Tier.combine(self.alpha_ext.tier, *(f.tier for f in self._alpha_dot))

    def _lift(self, s: float, pts: np.ndarray) -> np.ndarray:
        col = np.full(pts.shape[:-1] + (1,), float(s))
        return np.concatenate([col, pts], axis=-1)

    def arrays(self, s: float, pts: np.ndarray):
        """``(alpha, alpha_dot, dalpha, beta)`` coefficient arrays at slice ``s``."""
        ext = self._lift(s, pts)
        dim = self.chart.dim
        a = np.stack([f(ext) for f in self._alpha], axis=-1)
        adot = np.stack([f(ext) for f in self._alpha_dot], axis=-1)
        W = np.zeros(pts.shape[:-1] + (dim, dim))
        for (i, j), f in self._dalpha.items():
            v = f(ext)
            W[..., i, j] = v
            W[..., j, i] = -v
        return a, adot, W, self.beta.coefficients(pts)

    def member(self, s: float) -> FoliatedContactPair:
        """The pair ``(beta, alpha_s)``."""
        alpha = pullback(_slice_map(self.chart, self.ext_chart, s), self.alpha_ext)
        return FoliatedContactPair(self.chart, self.beta, alpha, self.orientation_form, name=f"{self.name}[s={s:g}]")

    def alpha_dot(self, s: float) -> DifferentialForm:
        m = _slice_map(self.chart, self.ext_chart, s)
        return DifferentialForm(self.chart, 1, {(i,): f.compose(m) for i, f in enumerate(self._alpha_dot)})

    def certify(self, samples: int = 5, grid=None, tol: Tolerances = DEFAULT_TOLERANCES) -> list[CheckReport]:
        """Verify the contact condition at ``samples`` equispaced parameters."""
        reports = []
        for s in np.linspace(*self.s_range, samples):
            report = verify_contact_foliation(self.member(float(s)), grid, tol)
            if not report.passed:
                raise CertificationError(f"family member s={s:g} is not foliated contact", report)
            reports.append(report)
        return reports


# ---------------------------------------------------------------------------
# Gray flow
# ---------------------------------------------------------------------------


def _reeb_rows(a, b, W):
    dim = a.shape[-1]
    A = np.zeros(a.shape[:-1] + (dim + 2, dim + 1))
    rhs = np.zeros(a.shape[:-1] + (dim + 2,))
    A[..., 0, :dim] = a
    A[..., 1, :dim] = b
    A[..., 2:, :dim] = np.swapaxes(W, -1, -2)
    A[..., 2:, dim] = -b
    rhs[..., 0] = 1.0
    return A, rhs


def gray_field(family: ContactFamily, s: float, pts: np.ndarray):
    """Moser field ``X_s``, ``lambda_s`` and the tangency residuals at ``pts``.

    ``lambda = alpha_dot(R_s)`` and ``X`` solves ``alpha_s(X) = 0``,
    ``beta(X) = 0``, ``i_X dalpha_s + alpha_dot = lambda alpha_s + mu beta``.
    """
    a, adot, W, b = family.arrays(s, pts)
    dim = family.chart.dim
    A, rhs = _reeb_rows(a, b, W)
    sol, _, _ = solve_batched(A, rhs, pts)
    lam = np.einsum("...i,...i->...", adot, sol[..., :dim])
    # same matrix as the Reeb system; only the right-hand side changes
    rhs = np.zeros_like(rhs)
    rhs[..., 2:] = lam[..., None] * a - adot
    sol, _, _ = solve_batched(A, rhs, pts)
    X = sol[..., :dim]
    tangency = np.stack(
        [np.abs(np.einsum("...i,...i->...", a, X)), np.abs(np.einsum("...i,...i->...", b, X))], axis=-1
    )
    return X, lam, tangency


@dataclass(frozen=True)
class GrayFlowState:
    """Endpoint data of one Gray-flow trajectory.

    ``g`` is the conformal factor with ``φ_s* alpha_s = g alpha_0`` on the
    leaves; ``lam`` is ``lambda_s`` at the current point.  The histories run
    over the accepted steps.
    """

    seed: np.ndarray
    g: float
    lam: float
    trajectory: Trajectory
    log_g: np.ndarray
    lam_history: np.ndarray
    defect: float
    conformal_residual: float


@dataclass(frozen=True)
class GrayFlowReport:
    states: list
    step: float
    fd_offset: float
    max_defect: float
    max_beta_x: float
    max_alpha_x: float
    max_conformal_residual: float
    certificates: list = field(default_factory=list)

    def to_check(self, tolerance: float = 1e-3) -> CheckReport:
        passed = self.max_defect < tolerance and self.max_beta_x < 1e-12 and self.max_alpha_x < 1e-12
        return CheckReport(
            name="gray",
            passed=passed,
            tier=Tier.FD,
            metric="max endpoint sin angle(Dphi xi_0, xi_1)",
            value=self.max_defect,
            tolerance=tolerance,
            grid_points=len(self.states),
            details={
                "step": self.step,
                "fd_offset": self.fd_offset,
                "max_beta_x": self.max_beta_x,
                "max_alpha_x": self.max_alpha_x,
                "max_conformal_residual": self.max_conformal_residual,
                "g": [s.g for s in self.states],
            },
        )


def gray_flow(
    family: ContactFamily,
    seeds: Sequence,
    step: float = DEFAULT_STEP,
    fd_offset: float = DIFFERENTIAL_OFFSET,
    certify: bool = True,
    certify_grid=9,
) -> GrayFlowReport:
    """Integrate the Gray flow of ``family`` from each seed over the parameter range.

    State per point is ``(x, ln g)`` with ``x' = X_s(x)`` and
    ``(ln g)' = lambda_s(x)``.  Each seed is carried with its offset cloud so
    ``Dφ`` at the endpoint comes from central differences.
    """
    chart = family.chart
    certificates = family.certify(grid=certify_grid) if certify else []
    seeds = chart.require(np.atleast_2d(np.asarray(seeds, dtype=float)))
    clouds = np.stack([offset_cloud(p, fd_offset) for p in seeds])  # (n, m, dim)
    n, m, dim = clouds.shape
    flat0 = clouds.reshape(-1, dim)
    y0 = np.concatenate([flat0, np.zeros((len(flat0), 1))], axis=-1)
    s0, s1 = family.s_range
    times = time_grid(s1, step, s0)
    tangency_max = np.zeros(2)
    lam_hist = []

    last = {}

    def rhs(s, y):
        X, lam, tang = gray_field(family, s, chart.wrap(y[:, :dim]))
        last["lam"], last["tang"] = lam, tang
        return np.concatenate([X, lam[:, None]], axis=-1)

    def observe(k, s, y):
        np.maximum(tangency_max, last["tang"].max(axis=0), out=tangency_max)
        lam_hist.append(last["lam"].reshape(n, m)[:, 0])

    def wrap(y):
        y = y.copy()
        y[:, :dim] = chart.wrap(y[:, :dim])
        return y

    states, exited = rk4(rhs, y0, times, post=wrap, inside=lambda y: bool(np.all(chart.contains(y[:, :dim]))), observe=observe)
    final = states[-1]
    _, lam_end, tang = gray_field(family, times[len(states) - 1], final[:, :dim])
    np.maximum(tangency_max, tang.max(axis=0), out=tangency_max)
    lam_hist.append(lam_end.reshape(n, m)[:, 0])
    lam_hist = np.stack(lam_hist, axis=-1)

    a0, _, _, b0 = family.arrays(s0, seeds)
    end_pts = final.reshape(n, m, dim + 1)[:, 0, :dim]
    a1, _, _, b1 = family.arrays(times[len(states) - 1], end_pts)
    results = []
    for k in range(n):
        cloud = final.reshape(n, m, dim + 1)[k, :, :dim]
        D = cloud_differential(chart, cloud, fd_offset)
        xi0 = kernel_basis(np.stack([a0[k], b0[k]]))
        xi1 = kernel_basis(np.stack([a1[k], b1[k]]))
        log_g = states[:, :, dim].reshape(len(states), n, m)[:, k, 0]
        g = float(np.exp(log_g[-1]))
        leaf = kernel_basis(b0[k][None, :])
        conformal = float(np.max(np.abs(a1[k] @ (D @ leaf) - g * (a0[k] @ leaf))))
        traj = Trajectory(times[: len(states)], states[:, :, :dim].reshape(len(states), n, m, dim)[:, k, 0], float(step), exited=exited)
        results.append(
            GrayFlowState(
                seed=seeds[k],
                g=g,
                lam=float(lam_hist[k, -1]),
                trajectory=traj,
                log_g=log_g,
                lam_history=lam_hist[k],
                defect=subspace_defect(D @ xi0, xi1),
                conformal_residual=conformal,
            )
        )
    return GrayFlowReport(
        states=results,
        step=float(step),
        fd_offset=float(fd_offset),
        max_defect=max(s.defect for s in results),
        max_beta_x=float(tangency_max[1]),
        max_alpha_x=float(tangency_max[0]),
        max_conformal_residual=max(s.conformal_residual for s in results),
        certificates=certificates,
    )


# ---------------------------------------------------------------------------
# Mapping-torus lift
# ---------------------------------------------------------------------------


def mapping_torus_lift(leaf: LeafContactForm, H) -> VectorField:
    """The field ``X̃`` with ``alpha_L(X̃) = H`` and ``i_X̃ dalpha_L + dH ∝ alpha_L``.

    ``H`` is a scalar field on the leaf chart (or a number).  The connection
    direction of the mapping-torus pair is ``∂t + X̃``.
    """
    chart = leaf.chart
    H = H if isinstance(H, ScalarField) else ScalarField.constant(float(H))
    dH = exterior_derivative(DifferentialForm.scalar(chart, H))
    dim = chart.dim

    def solve(pts):
        flat = pts.reshape(-1, dim)
        A = np.zeros((len(flat), dim + 1, dim + 1))
        rhs = np.zeros((len(flat), dim + 1))
        a = leaf.alpha.coefficients(flat)
        A[:, 0, :dim] = a
        A[:, 1:, :dim] = np.swapaxes(leaf.dalpha.dense(flat), -1, -2)
        A[:, 1:, dim] = -a
        rhs[:, 0] = H(flat)
        rhs[:, 1:] = -dH.coefficients(flat)
        sol, _, _ = solve_batched(A, rhs, flat)
        return sol[:, :dim].reshape(pts.shape)

    return VectorField.from_function(chart, solve)
