"""Batch experiments: parameter grids, method comparison and figure presets.

An experiment fixes a family, a grid over one axis variable and a list of
methods.  Family parameters are numbers or arithmetic expressions in the
axis variable and the other parameters, e.g. ``T = 10*Delta/v0``.
"""

import ast
import configparser
import csv
import io
import math
import operator
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from . import closed_form as cf
from . import ddp
from .errors import NlsweepError, UnsupportedError, ValidationError
from .gap_transform import equivalent_nonlinearity
from .schrodinger import transition_probability
from .sweep_catalog import (
    crossing_derivatives,
    family_parameters,
    make_profile,
    nonlinearity_params,
)

# ---------------------------------------------------------------- expressions

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {
    name: getattr(math, name)
    for name in ("sqrt", "exp", "log", "log10", "sin", "cos", "tan", "sinh", "cosh", "tanh",
                 "asinh", "acosh", "atanh", "erf")
}
_FUNCS["abs"] = abs
_CONSTS = {"pi": math.pi, "e": math.e}


def evaluate_expression(text, env):
    """Evaluate an arithmetic expression over numbers, names and math functions."""
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id in env:
                return float(env[node.id])
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise KeyError(node.id)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            return float(_FUNCS[node.func.id](*[ev(a) for a in node.args]))
        raise ValidationError(f"unsupported syntax in expression {text!r}")

    return ev(tree)


def resolve_parameters(family, params, axis, x):
    """Family parameters at grid value ``x``.

    The axis variable is bound under its own name; if it names a family
    parameter that is not given explicitly, that parameter takes the value x.
    """
    schema = family_parameters(family)
    given = dict(params)
    if axis in schema and axis not in given:
        given[axis] = x
    env = {axis: x}
    for name, default in schema.items():
        if name not in given and default is not None:
            env[name] = default
    pending = dict(given)
    while pending:
        progress = False
        for name in list(pending):
            val = pending[name]
            if isinstance(val, (int, float)):
                env[name] = float(val)
                del pending[name]
                progress = True
                continue
            try:
                env[name] = evaluate_expression(val, env)
            except KeyError:
                continue
            except (ArithmeticError, ValueError) as exc:
                raise ValidationError(f"parameter {name} = {val!r}: {exc}") from None
            del pending[name]
            progress = True
        if not progress:
            raise ValidationError(
                f"cannot resolve parameter(s) {', '.join(sorted(pending))}: unknown names or a cycle"
            )
    return {k: env[k] for k in schema if k in env}


# ---------------------------------------------------------------- methods

CLOSED_FORMS = (
    "lzsm", "quadratic", "quadratic_alt", "cubic", "cubic_linearized", "unified",
    "variable_gap", "equivalent_unified", "demkov_kunike", "rosen_zener",
    "rotating_field", "rotating_field_half_turn", "square_pulse", "sinh_large_xi",
    "double_passage",
)
_METHOD_RE = re.compile(r"^(integrator|ddp(?::(\d+|standard))?|closed-form:([a-z_]+))$")


def _check_method(m, ddp_n_zeros):
    mt = _METHOD_RE.match(m)
    if not mt:
        raise ValidationError(f"unknown method {m!r}; use integrator, ddp:<n>, closed-form:<id>")
    if mt.group(3) and mt.group(3) not in CLOSED_FORMS:
        raise ValidationError(f"unknown closed form {mt.group(3)!r}; known: {', '.join(CLOSED_FORMS)}")
    if mt.group(2) and mt.group(2) != "standard" and int(mt.group(2)) < 1:
        raise ValidationError("ddp:<n> needs n >= 1")
    if m == "ddp" and ddp_n_zeros < 1:
        raise ValidationError("ddp.n_zeros must be >= 1")


def adiabaticity(p):
    """delta = Delta^2/(4 v0); for the rotating field Delta <-> Omega, v0 <-> omega Omega."""
    if p.family == "rotating":
        return p.params["Omega"] / (4 * p.params["omega"])
    c = crossing_derivatives(p)
    if not c.v0 > 0:
        raise UnsupportedError("v0 = 0: adiabaticity parameter undefined")
    return c.delta


def _closed_form(p, ident):
    prm = p.params
    fam = p.family
    if ident == "lzsm":
        return cf.lzsm(adiabaticity(p))
    if ident in ("quadratic", "quadratic_alt", "cubic", "cubic_linearized", "unified"):
        delta = adiabaticity(p)
        chi2, chi3 = nonlinearity_params(p)
        return {
            "quadratic": lambda: cf.quadratic_corrected(delta, chi2),
            "quadratic_alt": lambda: cf.quadratic_corrected_alt(delta, chi2),
            "cubic": lambda: cf.cubic_corrected(delta, chi3),
            "cubic_linearized": lambda: cf.cubic_corrected(delta, chi3, linearized=True),
            "unified": lambda: cf.unified_corrected(delta, chi2, chi3),
        }[ident]()
    if ident == "variable_gap":
        c = crossing_derivatives(p)
        return cf.variable_gap_corrected(c.delta, c.gap1 / c.v0)
    if ident == "equivalent_unified":
        chi2, chi3 = equivalent_nonlinearity(p)
        return cf.unified_corrected(adiabaticity(p), chi2, chi3)
    if ident == "demkov_kunike" and fam in ("demkov_kunike", "tangent"):
        return cf.demkov_kunike(prm["A"], prm["B"], prm["T"])
    if ident == "rosen_zener" and fam == "rosen_zener":
        return cf.rosen_zener(prm["a"], prm["b"], prm["T"])
    if ident in ("rotating_field", "rotating_field_half_turn") and fam == "rotating":
        x = prm["omega"] / prm["Omega"]
        if ident == "rotating_field_half_turn":
            return cf.rotating_field_half_turn(x)
        return cf.rotating_field(x, math.hypot(prm["Omega"], prm["omega"]) * prm["duration"])
    if ident == "square_pulse" and fam in ("power_law", "erf"):
        return cf.square_pulse_limit(prm["A"], prm["Delta"])
    if ident == "sinh_large_xi" and fam == "sinh":
        return cf.sinh_large_xi(prm["A"], prm["T"], prm["Delta"])
    if ident == "double_passage" and fam == "quadratic":
        return ddp.double_passage_probability(prm["v0"], prm["v1"], prm["Delta"]).probability
    raise UnsupportedError(f"closed form {ident!r} does not apply to family {fam!r}")


def evaluate_method(p, method, rtol=1e-10, tol=1e-6, ddp_n_zeros=1):
    """(probability, diagnostics) for one method on one profile."""
    if method == "integrator":
        r = transition_probability(p, rtol=rtol, tol=tol)
        return r.probability, {"converged": r.converged, "window": r.window}
    if method.startswith("ddp"):
        arg = method.partition(":")[2] or str(ddp_n_zeros)
        if arg == "standard":
            r = ddp.standard_probability(p)
            return r.probability, {"n_zeros_used": 1}
        r = ddp.generalized_probability(p, int(arg))
        return r.probability, {"n_zeros_used": r.details["n_zeros_used"]}
    ident = method.partition(":")[2]
    return float(_closed_form(p, ident)), {}


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class ExperimentSpec:
    """A family, a one-dimensional grid and the methods evaluated on it."""

    family: str
    axis: str
    grid_min: float
    grid_max: float
    points: int
    methods: Tuple[str, ...]
    params: Mapping[str, object] = field(default_factory=dict)
    scale: str = "linear"
    rtol: float = 1e-10
    tol: float = 1e-6
    ddp_n_zeros: int = 1
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "params", dict(self.params))
        family_parameters(self.family)  # unknown family -> error
        if not self.grid_min < self.grid_max:
            raise ValidationError("grid.min must be < grid.max")
        if int(self.points) != self.points or self.points < 2:
            raise ValidationError("grid.points must be an integer >= 2")
        if self.scale not in ("linear", "log"):
            raise ValidationError("grid.scale must be 'linear' or 'log'")
        if self.scale == "log" and not self.grid_min > 0:
            raise ValidationError("a log grid needs grid.min > 0")
        if not self.methods:
            raise ValidationError("select at least one method")
        if len(set(self.methods)) != len(self.methods):
            raise ValidationError("duplicate methods")
        for m in self.methods:
            _check_method(m, self.ddp_n_zeros)
        if not 1e-13 <= self.rtol <= 1e-6:
            raise ValidationError("integrator.rtol must lie in [1e-13, 1e-6]")
        if not self.tol > 0:
            raise ValidationError("window.tol must be > 0")
        if self.workers < 1:
            raise ValidationError("run.workers must be >= 1")

    def grid(self):
        if self.scale == "log":
            return np.geomspace(self.grid_min, self.grid_max, int(self.points))
        return np.linspace(self.grid_min, self.grid_max, int(self.points))


@dataclass(frozen=True)
class ResultRow:
    """Outcome of every method at one grid point."""

    grid_value: float
    params: Mapping[str, float]
    probabilities: Mapping[str, float]
    delta_p: Mapping[str, float]
    status: str
    diagnostics: Mapping[str, Dict] = field(default_factory=dict)


def _error_text(exc):
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def run_point(spec, x):
    """Evaluate all methods at grid value ``x``; failures are recorded, not raised."""
    nan = math.nan
    probs = {m: nan for m in spec.methods}
    dps = {m: nan for m in spec.methods}
    diags = {}
    try:
        params = resolve_parameters(spec.family, spec.params, spec.axis, float(x))
        p = make_profile(spec.family, params)
    except NlsweepError as exc:
        return ResultRow(float(x), {}, probs, dps, "error: " + _error_text(exc))
    params = dict(p.params)
    try:
        ref = cf.lzsm(adiabaticity(p))
    except NlsweepError:
        ref = nan
    errors = []
    for m in spec.methods:
        try:
            P, d = evaluate_method(p, m, spec.rtol, spec.tol, spec.ddp_n_zeros)
        except NlsweepError as exc:
            errors.append(f"{m}: {_error_text(exc)}")
            continue
        probs[m] = P
        dps[m] = P - ref
        diags[m] = d
    status = "ok" if not errors else "error: " + "; ".join(errors)
    return ResultRow(float(x), params, probs, dps, status, diags)


def _run_indexed(args):
    spec, x = args
    return run_point(spec, x)


def run_grid(spec, write=True):
    """One row per grid point, in grid order; written to ``spec.output_path`` if set."""
    xs = [float(x) for x in spec.grid()]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_indexed, [(spec, x) for x in xs]))
    else:
        rows = [run_point(spec, x) for x in xs]
    if write and spec.output_path:
        with open(spec.output_path, "w", newline="") as fh:
            fh.write(rows_to_csv(spec, rows))
    return rows


def _fmt(x):
    return f"{x:.17g}"


def rows_to_csv(spec, rows):
    """CSV text: grid_value, probabilities, delta_p per method, status."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid_value", *spec.methods, *(f"delta_p:{m}" for m in spec.methods), "status"])
    for r in rows:
        w.writerow([_fmt(r.grid_value), *(_fmt(r.probabilities[m]) for m in spec.methods),
                    *(_fmt(r.delta_p[m]) for m in spec.methods), r.status])
    return buf.getvalue()


def compare_methods(spec, rows=None):
    """Max and mean absolute deviation for every pair of methods."""
    if len(spec.methods) < 2:
        raise ValidationError("comparison needs at least two methods")
    if rows is None:
        rows = run_grid(spec, write=False)
    out = {}
    ms = spec.methods
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            d = np.array([r.probabilities[ms[i]] - r.probabilities[ms[j]] for r in rows])
            d = np.abs(d[np.isfinite(d)])
            out[f"{ms[i]} vs {ms[j]}"] = {
                "max_abs": float(d.max()) if d.size else math.nan,
                "mean_abs": float(d.mean()) if d.size else math.nan,
                "n_points": int(d.size),
            }
    return out


# ---------------------------------------------------------------- configuration

_KEYS = {
    "profile.family", "grid.axis", "grid.min", "grid.max", "grid.points", "grid.scale",
    "methods", "integrator.rtol", "window.tol", "ddp.n_zeros", "output.path", "run.workers",
}


def _number(key, text):
    try:
        return float(evaluate_expression(text, {}))
    except (ValidationError, KeyError):
        raise ValidationError(f"{key}: expected a number, got {text!r}") from None


def spec_from_mapping(cfg):
    """ExperimentSpec from flat ``section.key -> text`` entries."""
    cfg = {k.strip(): str(v).strip() for k, v in cfg.items()}
    unknown = [k for k in cfg if k not in _KEYS and not k.startswith("profile.")]
    if unknown:
        raise ValidationError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    for k in ("profile.family", "grid.axis", "grid.min", "grid.max", "grid.points", "methods"):
        if k not in cfg:
            raise ValidationError(f"missing configuration key {k!r}")
    params = {}
    for k, v in cfg.items():
        if k.startswith("profile.") and k != "profile.family":
            name = k[len("profile."):]
            try:
                params[name] = float(v)
            except ValueError:
                params[name] = v
    points = _number("grid.points", cfg["grid.points"])
    return ExperimentSpec(
        family=cfg["profile.family"],
        axis=cfg["grid.axis"],
        grid_min=_number("grid.min", cfg["grid.min"]),
        grid_max=_number("grid.max", cfg["grid.max"]),
        points=int(points) if points.is_integer() else points,
        methods=tuple(m.strip() for m in cfg["methods"].split(",") if m.strip()),
        params=params,
        scale=cfg.get("grid.scale", "linear"),
        rtol=_number("integrator.rtol", cfg.get("integrator.rtol", "1e-10")),
        tol=_number("window.tol", cfg.get("window.tol", "1e-6")),
        ddp_n_zeros=int(_number("ddp.n_zeros", cfg.get("ddp.n_zeros", "1"))),
        output_path=cfg.get("output.path") or None,
        workers=int(_number("run.workers", cfg.get("run.workers", "1"))),
    )


def _parser():
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str  # parameter names are case sensitive
    return cp


def parse_config(text, overrides=None):
    """ExperimentSpec from flat ``key = value`` text plus optional overrides."""
    cp = _parser()
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed configuration: {exc}") from None
    cfg = dict(cp["experiment"])
    cfg.update(overrides or {})
    return spec_from_mapping(cfg)


def load_config(path, overrides=None):
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


# ---------------------------------------------------------------- presets

FIGURES = tuple(f"fig{n}" for n in range(3, 14))


def preset_series(figure, overrides=None):
    """Named series (section name -> ExperimentSpec) of a figure preset."""
    figure = str(figure).lower()
    if figure not in FIGURES:
        raise ValidationError(f"unknown scenario {figure!r}; known: {', '.join(FIGURES)}")
    text = resources.files("nlsweep.presets").joinpath(f"{figure}.cfg").read_text()
    cp = _parser()
    cp.read_string(text)
    out = {}
    for name in cp.sections():
        cfg = dict(cp[name])
        cfg.update(overrides or {})
        out[name] = spec_from_mapping(cfg)
    return out


def reproduce(figure, outdir=None, overrides=None):
    """Run every series of a figure preset.

    Returns ``{series: (spec, rows)}``; with ``outdir`` each series is also
    written to ``<outdir>/<figure>_<series>.csv``.
    """
    out = {}
    for name, spec in preset_series(figure, overrides).items():
        rows = run_grid(spec, write=False)
        if outdir is not None:
            path = os.path.join(outdir, f"{figure}_{name}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(rows_to_csv(spec, rows))
        out[name] = (spec, rows)
    return out
