"""Command-line entry point.

Subcommands::

    leafwise verify    --model t4 --p 0 --q 0 --r 0 [--check contact|frobenius|parallel|all]
    leafwise verify    --form-file forms.cfg
    leafwise fields    --model local [--table fields.csv]
    leafwise transport --model local --point 0.5,0,0.5,0 --t-end 0.5
    leafwise gray      --model rotating_t4 --step 1e-3
    leafwise lutz      --R-outer 0.8
    leafwise glue      --epsilon 0.5

Every subcommand accepts ``--config`` (an INI file, see :data:`CONFIG_SCHEMA`),
``--grid``, ``--format json|text`` and ``--output``.  Command-line values
override the config file.  Exit status is 0 when every check passes, 1 on a
geometric failure and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import sympy as sp

from leafwise import constructions, flows, foliated, models
from leafwise.errors import CertificationError, DegeneracyError, DomainError, LeafwiseError, ModelMismatchError
from leafwise.forms import Chart, DifferentialForm
from leafwise.reports import CheckReport, _plain
from leafwise.tolerances import DEFAULT_TOLERANCES, Tier, Tolerances

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

COMMANDS = ("verify", "fields", "transport", "gray", "lutz", "glue")
CHECKS = ("contact", "frobenius", "parallel", "all")

# section -> allowed keys; [model] takes the chosen model's parameter names
CONFIG_SCHEMA = {
    "run": {"operation", "model", "form_file", "check", "format", "output"},
    "model": None,
    "grid": {"points"},
    "tolerances": {"exact", "fd", "positivity", "fd_step"},
    "flow": {"step", "t_end", "point", "seeds", "fd_offset", "sample_every"},
    "lutz": {"r_outer", "at_t"},
    "glue": {"epsilon", "slope"},
}


class ConfigError(Exception):
    """Bad flags, config file or form file (exit status 2)."""


@dataclass
class RunConfig:
    operation: str
    model: str | None = None
    parameters: dict = field(default_factory=dict)
    form_file: str | None = None
    check: str = "contact"
    grid: Any = None
    step: float = flows.DEFAULT_STEP
    t_end: float = 0.5
    point: list | None = None
    seeds: list | None = None
    fd_offset: float = flows.DIFFERENTIAL_OFFSET
    sample_every: int = 10
    r_outer: float = 0.8
    at_t: float = 0.5
    epsilon: float = 0.5
    slope: float = 0.25
    tolerances: Tolerances = DEFAULT_TOLERANCES
    format: str = "json"
    output: str = "-"
    table: str | None = None

    def echo(self) -> dict:
        out = {
            "operation": self.operation,
            "model": self.model,
            "parameters": dict(sorted(self.parameters.items())),
            "form_file": self.form_file,
            "grid": self.grid,
            "tolerances": {
                "exact": self.tolerances.exact,
                "fd": self.tolerances.fd,
                "positivity": self.tolerances.positivity,
                "fd_step": self.tolerances.fd_step,
            },
        }
        if self.operation == "verify":
            out["check"] = self.check
        if self.operation in ("transport", "gray"):
            out.update(step=self.step, fd_offset=self.fd_offset)
        if self.operation == "transport":
            out.update(t_end=self.t_end, point=self.point, sample_every=self.sample_every)
        if self.operation == "gray":
            out["seeds"] = self.seeds
        if self.operation == "lutz":
            out.update(r_outer=self.r_outer, at_t=self.at_t)
        if self.operation == "glue":
            out.update(epsilon=self.epsilon, slope=self.slope)
        return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text) -> Any:
    if text is None:
        return None
    values = _floats(text)
    if not values or any(v < 2 or v != int(v) for v in values):
        raise ConfigError(f"grid must be integers >= 2, got {text!r}")
    counts = [int(v) for v in values]
    return counts[0] if len(counts) == 1 else counts


def _number(section: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} must be a number, got {value!r}") from exc


def read_config(path: str) -> dict:
    """Parse an INI file strictly; unknown sections or keys raise :class:`ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]; allowed: {sorted(CONFIG_SCHEMA)}")
        allowed = CONFIG_SCHEMA[section]
        items = dict(parser.items(section))
        if allowed is not None:
            unknown = set(items) - allowed
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
        out[section] = items
    return out


def _chart_from_spec(items: dict) -> Chart:
    axes = {}
    for name, spec in items.items():
        spec = spec.strip()
        if spec.startswith("period"):
            axes[name] = _number("chart", name, spec.split(None, 1)[1] if " " in spec else "")
        else:
            bounds = _floats(spec)
            if len(bounds) != 2:
                raise ConfigError(f"[chart] {name}: expected 'lo, hi' or 'period P', got {spec!r}")
            axes[name] = tuple(bounds)
    try:
        return Chart.from_axes(**axes)
    except ValueError as exc:
        raise ConfigError(f"[chart]: {exc}") from exc


def parse_one_form(chart: Chart, text: str) -> DifferentialForm:
    """A 1-form written as a sympy expression linear in ``d<axis>`` symbols, e.g. ``sin(2*pi*z)*dx - dt``."""
    coords = chart.symbols()
    diffs = [sp.Symbol("d" + n, real=True) for n in chart.axis_names]
    local = {s.name: s for s in coords + tuple(diffs)}
    local["pi"] = sp.pi
    try:
        expr = sp.expand(sp.sympify(text, locals=local))
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse form {text!r}: {exc}") from exc
    comps = {}
    for i, d in enumerate(diffs):
        coeff = sp.diff(expr, d)
        if any(coeff.has(other) for other in diffs):
            raise ConfigError(f"form {text!r} is not linear in the differentials")
        if coeff != 0:
            comps[(i,)] = coeff
    rest = sp.simplify(expr - sum(sp.Symbol("d" + chart.axis_names[k[0]], real=True) * c for k, c in comps.items()))
    if rest != 0:
        raise ConfigError(f"form {text!r} has a term without a differential: {rest}")
    unknown = expr.free_symbols - set(coords) - set(diffs)
    if unknown:
        raise ConfigError(f"form {text!r} uses unknown symbols {sorted(map(str, unknown))}")
    return DifferentialForm.from_expressions(chart, 1, comps)


def read_form_file(path: str):
    """Load ``[chart]`` and ``[forms]`` (``alpha``, optional ``beta`` and ``leaf_axes``) sections.

    An even-dimensional chart with ``beta`` gives a foliated pair; an
    odd-dimensional chart without ``beta`` a single-leaf contact form.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read form file {path}: {exc}") from exc
    if set(parser.sections()) != {"chart", "forms"}:
        raise ConfigError("form file needs exactly the sections [chart] and [forms]")
    chart = _chart_from_spec(dict(parser.items("chart")))
    forms = dict(parser.items("forms"))
    unknown = set(forms) - {"alpha", "beta", "leaf_axes"}
    if unknown or "alpha" not in forms:
        raise ConfigError(f"[forms] needs alpha and allows beta, leaf_axes (got {sorted(forms)})")
    alpha = parse_one_form(chart, forms["alpha"])
    name = Path(path).stem
    try:
        if "beta" not in forms:
            return foliated.LeafContactForm(chart, alpha, name=name)
        beta = parse_one_form(chart, forms["beta"])
        orientation = None
        if "leaf_axes" in forms:
            axes = [a.strip() for a in forms["leaf_axes"].split(",") if a.strip()]
            orientation = foliated.leaf_orientation(chart, beta, axes)
        return foliated.FoliatedContactPair(chart, beta, alpha, orientation, name=name)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"form file {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leafwise", description="Verify and construct foliated contact structures on charts.")
    sub = parser.add_subparsers(dest="operation", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--model", choices=sorted(models.MODELS))
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="model parameter (repeatable)")
    for key in ("p", "q", "r"):
        common.add_argument(f"--{key}", type=float, help=f"shorthand for --param {key}=VALUE")
    common.add_argument("--grid", help="points per axis: N or N1,N2,...")
    common.add_argument("--format", choices=("json", "text"))
    common.add_argument("--output", help="report path ('-' for stdout)")
    for name in ("exact", "fd", "positivity", "fd_step"):
        common.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float)

    v = sub.add_parser("verify", parents=[common], help="run verifiers on a model or a form file")
    v.add_argument("--form-file")
    v.add_argument("--check", choices=CHECKS)

    f = sub.add_parser("fields", parents=[common], help="solve the transverse and Reeb fields on a grid")
    f.add_argument("--table", help="write a CSV of points, T, R and c")

    for name, helptext in (("transport", "parallel transport along T"), ("gray", "Gray flow of a family")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--step", type=float)
        p.add_argument("--fd-offset", type=float)
        if name == "transport":
            p.add_argument("--t-end", type=float)
            p.add_argument("--point", help="start point, comma separated")
            p.add_argument("--sample-every", type=int)
        else:
            p.add_argument("--seeds", help="seed points: 'a,b,c,d; e,f,g,h'")

    lz = sub.add_parser("lutz", parents=[common], help="full Lutz twist on a standard tube")
    lz.add_argument("--form-file", help="tube form on (t, z, r, theta) instead of a model")
    lz.add_argument("--R-outer", dest="r_outer", type=float)
    lz.add_argument("--at-t", type=float)

    g = sub.add_parser("glue", parents=[common], help="connected sum along a divisor")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--slope", type=float)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the config file and command-line flags (flags win)."""
    file = read_config(args.config) if args.config else {}
    run = file.get("run", {})
    if run.get("operation", args.operation) != args.operation:
        raise ConfigError(f"config operation {run['operation']!r} does not match subcommand {args.operation!r}")
    cfg = RunConfig(operation=args.operation)
    default_model = {"gray": "rotating_t4", "lutz": "local", "glue": None}.get(args.operation, "t4")
    cfg.model = args.model or run.get("model") or default_model
    cfg.form_file = getattr(args, "form_file", None) or run.get("form_file")
    if cfg.form_file and args.operation not in ("verify", "lutz"):
        raise ConfigError("form files are only accepted by verify and lutz")
    if cfg.form_file and (args.model or run.get("model")):
        raise ConfigError("give either a model or a form file, not both")
    if cfg.form_file:
        cfg.model = None
    cfg.check = getattr(args, "check", None) or run.get("check", "contact")
    if cfg.check not in CHECKS:
        raise ConfigError(f"unknown check {cfg.check!r}")
    cfg.format = args.format or run.get("format", "json")
    if cfg.format not in ("json", "text"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    cfg.output = args.output or run.get("output", "-")

    params = {k: _number("model", k, v) for k, v in file.get("model", {}).items()}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        params[key.strip()] = _number("param", key, value)
    for key in ("p", "q", "r"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if cfg.model is not None:
        try:
            models.describe(cfg.model, **params)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    elif params:
        raise ConfigError("model parameters given without a model")
    cfg.parameters = params

    cfg.grid = _grid(args.grid or file.get("grid", {}).get("points"))
    tol = {k: _number("tolerances", k, v) for k, v in file.get("tolerances", {}).items()}
    for name in ("exact", "fd", "positivity", "fd_step"):
        if getattr(args, f"tol_{name}") is not None:
            tol[name] = getattr(args, f"tol_{name}")
    cfg.tolerances = DEFAULT_TOLERANCES.override(**tol)

    flow = file.get("flow", {})
    for key in ("step", "t_end", "fd_offset"):
        value = getattr(args, key, None)
        if value is None and key in flow:
            value = _number("flow", key, flow[key])
        if value is not None:
            if not value > 0:
                raise ConfigError(f"{key} must be positive")
            setattr(cfg, key, float(value))
    every = getattr(args, "sample_every", None) or flow.get("sample_every")
    if every is not None:
        cfg.sample_every = max(1, int(_number("flow", "sample_every", every)))
    point = getattr(args, "point", None) or flow.get("point")
    cfg.point = _floats(point) if point else None
    seeds = getattr(args, "seeds", None) or flow.get("seeds")
    cfg.seeds = [_floats(s) for s in seeds.split(";") if s.strip()] if seeds else None

    for section, keys in (("lutz", ("r_outer", "at_t")), ("glue", ("epsilon", "slope"))):
        for key in keys:
            value = getattr(args, key, None)
            if value is None and key in file.get(section, {}):
                value = _number(section, key, file[section][key])
            if value is not None:
                setattr(cfg, key, float(value))
    return cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _target(cfg: RunConfig):
    """The form-file object (uncertified) or the built-in model (certified on construction)."""
    if cfg.form_file:
        return read_form_file(cfg.form_file)
    return models.describe(cfg.model, **cfg.parameters).build()


def _failed_check(name: str, exc: Exception) -> CheckReport:
    report = getattr(exc, "report", None)
    if isinstance(report, CheckReport):
        return report
    witness = getattr(exc, "witness", None)
    return CheckReport(
        name=name, passed=False, tier=Tier.EXACT, metric=str(exc),
        value=float("nan"), tolerance=0.0, grid_points=0,
        witness=None if witness is None else tuple(np.ravel(witness).tolist()),
    )


def cmd_verify(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    obj = _target(cfg)
    tol, grid = cfg.tolerances, cfg.grid
    wanted = ("contact", "frobenius", "parallel") if cfg.check == "all" else (cfg.check,)
    checks = []
    for check in wanted:
        try:
            if isinstance(obj, foliated.FoliatedContactPair):
                run = {
                    "contact": lambda: foliated.verify_contact_foliation(obj, grid, tol),
                    "frobenius": lambda: foliated.check_frobenius(obj.beta, grid, tol),
                    "parallel": lambda: foliated.verify_parallel_identity(obj, grid, tol),
                }[check]
            elif isinstance(obj, foliated.SymplecticFoliationPair):
                run = {
                    "contact": lambda: foliated.verify_symplectic_foliation(obj, grid, tol),
                    "frobenius": lambda: foliated.check_frobenius(obj.beta, grid, tol),
                    "parallel": lambda: foliated.verify_symplectic_parallel(obj, grid, tol),
                }[check]
            elif isinstance(obj, foliated.LeafContactForm):
                if check != "contact":
                    raise ConfigError(f"check {check!r} needs a foliated pair; a single leaf only has 'contact'")
                run = lambda: foliated.verify_leaf_contact(obj, grid, tol)  # noqa: E731
            else:
                if check != "contact":
                    raise ConfigError("families support only the 'contact' check")
                reports = obj.certify(grid=grid, tol=tol)
                checks.extend(reports)
                continue
            checks.append(run())
        except (DegeneracyError, CertificationError) as exc:
            checks.append(_failed_check(check, exc))
    return checks, {}


def cmd_fields(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    pair = _target(cfg)
    if not isinstance(pair, foliated.FoliatedContactPair):
        raise ConfigError(f"fields needs a foliated contact model, {cfg.model!r} is not one")
    names = list(pair.chart.axis_names)
    result, checks, rows = {"axes": names}, [], None
    for kind in ("transverse", "reeb"):
        rep = foliated.solve_on_grid(pair, kind, cfg.grid)
        finite = bool(np.all(np.isfinite(rep.conditions)))
        result[kind] = {
            "max_residual": rep.max_residual,
            "max_condition": rep.max_condition,
            "conditions_finite": finite,
            "mean_field": dict(zip(names, rep.values.mean(axis=0).tolist())),
            "max_deviation_from_mean": float(np.max(np.abs(rep.values - rep.values.mean(axis=0)))),
            "scalar_range": [float(rep.scalars.min()), float(rep.scalars.max())],
        }
        checks.append(CheckReport(
            name=f"{kind}_field", passed=bool(rep.max_residual < 1e-10 and finite), tier=pair.alpha.tier,
            metric="max relative residual", value=rep.max_residual, tolerance=1e-10, grid_points=len(rep.points),
            details={"max_condition": rep.max_condition},
        ))
        if rows is None:
            rows = [rep.points]
        rows += [rep.values, rep.scalars[:, None]]
    result["min_frame_determinant"] = float(np.min(np.abs(foliated.frame_determinant(pair, rows[0]))))
    if cfg.table:
        header = names + [f"T_{n}" for n in names] + ["c"] + [f"R_{n}" for n in names] + ["lambda"]
        with open(cfg.table, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(np.concatenate(rows, axis=1).round(15).tolist())
        result["table"] = cfg.table
    return checks, result


def _default_point(chart: Chart, fraction: float = 0.5) -> list[float]:
    """Periodic axes at 0, bounded axes at ``lo + fraction (hi - lo)``."""
    return [0.0 if b is None else b[0] + fraction * (b[1] - b[0]) for b in chart.bounds]


def cmd_transport(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    pair = _target(cfg)
    if not isinstance(pair, foliated.FoliatedContactPair):
        raise ConfigError(f"transport needs a foliated contact model, {cfg.model!r} is not one")
    point = cfg.point or _default_point(pair.chart, 0.25)
    if len(point) != pair.chart.dim:
        raise ConfigError(f"point needs {pair.chart.dim} coordinates")
    traj, rep = flows.parallel_transport(pair, point, cfg.t_end, cfg.step, cfg.fd_offset, cfg.sample_every)
    result = {
        "start": list(point),
        "end": traj.end.tolist(),
        "end_time": traj.end_time,
        "exited": traj.exited,
        "samples": [{"time": float(t), "defect": float(d)} for t, d in zip(rep.times, rep.defects)],
    }
    return [rep.to_check(cfg.tolerances)], result


def cmd_gray(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    obj = _target(cfg)
    if isinstance(obj, foliated.FoliatedContactPair):
        obj = flows.ContactFamily.constant(obj)
    if not isinstance(obj, flows.ContactFamily):
        raise ConfigError(f"gray needs a family or a foliated contact model, {cfg.model!r} is neither")
    seeds = cfg.seeds
    if seeds is None:
        base = np.asarray(_default_point(obj.chart))
        seeds = [base, base + 0.25, base + np.linspace(0.1, 0.4, obj.chart.dim)]
        seeds = obj.chart.wrap(np.asarray(seeds)).tolist()
    if any(len(s) != obj.chart.dim for s in seeds):
        raise ConfigError(f"seeds need {obj.chart.dim} coordinates")
    rep = flows.gray_flow(obj, seeds, cfg.step, cfg.fd_offset)
    result = {
        "states": [
            {"seed": s.seed.tolist(), "end": s.trajectory.end.tolist(), "g": s.g, "lambda": s.lam,
             "defect": s.defect, "conformal_residual": s.conformal_residual}
            for s in rep.states
        ],
        "certificates": [c.to_dict() for c in rep.certificates],
    }
    return [rep.to_check()], result


def cmd_lutz(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    pair = _target(cfg)
    if not isinstance(pair, foliated.FoliatedContactPair) or not {"z", "r", "theta"} <= set(pair.chart.axis_names):
        raise ModelMismatchError(f"{cfg.model or cfg.form_file!r} has no (z, r, theta) tube", float("inf"))
    try:
        profile = constructions.lutz_profile(cfg.r_outer)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    twisted = constructions.lutz_twist(pair, profile, grid=cfg.grid, tol=cfg.tolerances)
    at = {"t": cfg.at_t} if "t" in pair.chart.axis_names else None
    r_star = constructions.detect_overtwisted_disk(twisted, at=at)
    pts = foliated.grid_points(pair.chart, cfg.grid)
    outside = pts[pts[:, pair.chart.axis("r")] > profile.R_outer]
    locality = (twisted.alpha - pair.alpha).max_abs(outside) if len(outside) else 0.0
    profile_check = profile.check()
    disk = CheckReport(
        name="overtwisted_disk", passed=r_star is not None and 0 < r_star < profile.R_outer,
        tier=Tier.EXACT, metric="r_star", value=float("nan") if r_star is None else r_star,
        tolerance=profile.R_outer, grid_points=1,
    )
    local = CheckReport(
        name="locality", passed=locality == 0.0, tier=Tier.EXACT,
        metric="max |alpha_twisted - alpha| for r > R_outer", value=locality, tolerance=0.0, grid_points=len(outside),
    )
    result = {"R_outer": profile.R_outer, "eps_match": profile.eps_match, "r_star": r_star}
    return [twisted.certificate, profile_check, disk, local], result


def cmd_glue(cfg: RunConfig) -> tuple[list[CheckReport], dict]:
    grid = 17 if cfg.grid is None else cfg.grid
    try:
        side = models.divisor_side(cfg.epsilon, cfg.slope)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _, rep = constructions.divisor_connected_sum(side, side, cfg.epsilon, cfg.slope, grid, cfg.tolerances)
    result = {"residual_f0": rep.residual_f0, "residual_f1": rep.residual_f1, "min_ratio_off_zero": rep.min_ratio_off_zero}
    return [rep.to_check(), rep.contact], result


COMMAND_TABLE = {
    "verify": cmd_verify,
    "fields": cmd_fields,
    "transport": cmd_transport,
    "gray": cmd_gray,
    "lutz": cmd_lutz,
    "glue": cmd_glue,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _jsonable(value):
    value = _plain(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    lines = [f"leafwise {payload['operation']}: {payload['status']}"]
    for check in payload.get("checks", []):
        status = "PASS" if check["passed"] else "FAIL"
        line = f"  [{status}] {check['name']}: {check['metric']} = {check['value']} (tol {check['tolerance']}, {check['tier']})"
        if check.get("witness") and not check["passed"]:
            line += f" witness={check['witness']}"
        lines.append(line)
    if "error" in payload:
        lines.append(f"  error: {payload['error']}")
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt, output = args.format or "json", args.output or "-"
    cfg = None
    try:
        cfg = resolve_config(args)
        fmt, output = cfg.format, cfg.output
        cfg.table = getattr(args, "table", None)
        checks, result = COMMAND_TABLE[cfg.operation](cfg)
        passed = all(c.passed for c in checks)
        payload = {"status": "pass" if passed else "fail", "checks": [c.to_dict() for c in checks], "result": result}
        code = EXIT_PASS if passed else EXIT_FAIL
    except (ConfigError, ModelMismatchError, DomainError) as exc:
        payload = {"status": "config_error", "error": str(exc.args[0]) if exc.args else type(exc).__name__}
        if isinstance(exc, ModelMismatchError):
            payload["deviation"] = exc.deviation
        code = EXIT_CONFIG
    except (CertificationError, DegeneracyError) as exc:
        payload = {"status": "fail", "error": str(exc.args[0]), "checks": [_failed_check(args.operation, exc).to_dict()]}
        code = EXIT_FAIL
    except LeafwiseError as exc:
        payload = {"status": "fail", "error": f"{type(exc).__name__}: {exc}"}
        code = EXIT_FAIL
    payload.update(schema_version=SCHEMA_VERSION, operation=args.operation, config=cfg.echo() if cfg else None)
    _emit(render(payload, fmt), output)
    return code


if __name__ == "__main__":
    sys.exit(main())
