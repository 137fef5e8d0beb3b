"""Command-line interface.

Every subcommand prints its result (JSON or CSV) on stdout.  On failure a
single JSON object ``{"error": ..., "message": ...}`` goes to stderr and the
exit status is nonzero.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import closed_form as cf
from . import ddp, gap_transform, runner, schrodinger
from .errors import NlsweepError, ValidationError
from .sweep_catalog import make_profile


def _kv(items):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"expected key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _num(key, text):
    try:
        return runner.evaluate_expression(text, {})
    except KeyError as exc:
        raise ValidationError(f"{key}: unknown name {exc.args[0]!r}") from None


def _profile(args):
    params = {k: _num(k, v) for k, v in _kv(args.param).items()}
    return make_profile(args.family, params)


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _emit(obj):
    print(json.dumps(obj, default=_jsonable, sort_keys=True))


def cmd_simulate(args):
    p = _profile(args)
    if args.t0 is not None or args.t1 is not None:
        if args.t0 is None or args.t1 is None:
            raise ValidationError("--t0 and --t1 go together")
        t0, t1 = _num("--t0", args.t0), _num("--t1", args.t1)
        r = schrodinger.adiabatic_transition_probability(p, t0, t1, rtol=args.rtol)
    else:
        r = schrodinger.transition_probability(p, rtol=args.rtol, tol=args.tol)
    _emit({"family": p.family, "params": dict(p.params), "probability": r.probability,
           "method": r.method, "window": r.window, "converged": r.converged,
           "residual": r.residual, "norm_defect": r.norm_defect})


def cmd_ddp_zeros(args):
    p = _profile(args)
    zs = ddp.find_upper_zeros(p, max_count=args.max_count)
    if not zs:
        _emit({"zeros": [], "diagnostic": zs.diagnostic})
        return
    _emit({"zeros": [
        {"t_c": z.t_c, "action": z.action, "gamma": z.gamma,
         "multiplicity_flag": z.multiplicity_flag, "newton_residual": z.newton_residual}
        for z in zs
    ]})


def cmd_ddp_prob(args):
    p = _profile(args)
    if args.n_zeros == 0:
        r = ddp.standard_probability(p)
    else:
        r = ddp.generalized_probability(p, args.n_zeros)
    _emit({"probability": r.probability, "method": r.method})


_FORMULAS = {
    "lzsm": (cf.lzsm, ("delta",)),
    "quadratic": (cf.quadratic_corrected, ("delta", "chi2")),
    "quadratic_alt": (cf.quadratic_corrected_alt, ("delta", "chi2")),
    "cubic": (cf.cubic_corrected, ("delta", "chi3")),
    "unified": (cf.unified_corrected, ("delta", "chi2", "chi3")),
    "variable_gap": (cf.variable_gap_corrected, ("delta", "slope")),
    "demkov_kunike": (cf.demkov_kunike, ("A", "B", "T")),
    "rosen_zener": (cf.rosen_zener, ("a", "b", "T")),
    "rotating_field": (cf.rotating_field, ("x", "theta")),
    "rotating_field_half_turn": (cf.rotating_field_half_turn, ("x",)),
    "square_pulse": (cf.square_pulse_limit, ("A", "Delta")),
    "sinh_large_xi": (cf.sinh_large_xi, ("A", "T", "Delta")),
    "double_passage": (lambda v0, v1, Delta: ddp.double_passage_probability(v0, v1, Delta).probability,
                       ("v0", "v1", "Delta")),
}


def cmd_closed_form(args):
    if args.formula not in _FORMULAS:
        raise ValidationError(f"unknown formula {args.formula!r}; known: {', '.join(sorted(_FORMULAS))}")
    fn, names = _FORMULAS[args.formula]
    given = {k: _num(k, v) for k, v in _kv(args.arg).items()}
    missing = [n for n in names if n not in given]
    extra = [k for k in given if k not in names]
    if missing or extra:
        raise ValidationError(f"{args.formula} takes {', '.join(names)}")
    P = fn(*(given[n] for n in names))
    out = {"formula": args.formula, "probability": P}
    if args.formula in ("quadratic", "quadratic_alt", "cubic", "unified"):
        out["advisory"] = list(cf.validity_advisory(given.get("chi2", 0.0), given.get("chi3", 0.0)))
    _emit(out)


def _spec(args):
    overrides = _kv(args.set)
    if args.config:
        return runner.load_config(args.config, overrides)
    return runner.spec_from_mapping(overrides)


def cmd_sweep(args):
    spec = _spec(args)
    rows = runner.run_grid(spec)
    if not spec.output_path:
        sys.stdout.write(runner.rows_to_csv(spec, rows))


def cmd_compare(args):
    _emit(runner.compare_methods(_spec(args)))


def cmd_reproduce(args):
    os.makedirs(args.outdir, exist_ok=True)
    out = runner.reproduce(args.figure, args.outdir, _kv(args.set))
    _emit({"figure": args.figure,
           "files": [os.path.join(args.outdir, f"{args.figure}_{name}.csv") for name in out]})


def cmd_transform_gap(args):
    p = _profile(args)
    tm = gap_transform.build_time_map(p, args.target_gap)
    q = gap_transform.equivalent_profile(p, time_map=tm)
    lo, hi = tm.tt_range
    a = max(-args.half_range, lo)
    b = min(args.half_range, hi)
    if a == lo or b == hi:
        # keep clear of the ends of a bounded map
        a, b = a + 1e-9 * (b - a), b - 1e-9 * (b - a)
    fe, fg, _, _ = q.scalar_functions()
    sys.stdout.write("t_tilde,t,eps_tilde,gap_tilde\n")
    for x in np.linspace(a, b, args.points):
        x = float(x)
        sys.stdout.write(f"{x:.17g},{tm.forward(x):.17g},{fe(x):.17g},{fg(x):.17g}\n")


def build_parser():
    ap = argparse.ArgumentParser(prog="nlsweep", description="Nonlinear avoided-crossing sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_profile(sp):
        sp.add_argument("--family", required=True)
        sp.add_argument("--param", "-p", action="append", metavar="NAME=VALUE")

    sp = sub.add_parser("simulate", help="integrate the Schrodinger equation")
    with_profile(sp)
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--t0", help="start time (expression), for a finite-time problem")
    sp.add_argument("--t1", help="end time (expression)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ddp-zeros", help="complex zeros of the quasi-energy")
    with_profile(sp)
    sp.add_argument("--max-count", type=int, default=10)
    sp.set_defaults(func=cmd_ddp_zeros)

    sp = sub.add_parser("ddp-prob", help="DDP transition probability")
    with_profile(sp)
    sp.add_argument("--n-zeros", type=int, default=0, help="0: single-zero standard formula")
    sp.set_defaults(func=cmd_ddp_prob)

    sp = sub.add_parser("closed-form", help="evaluate a closed-form probability")
    sp.add_argument("formula")
    sp.add_argument("arg", nargs="*", metavar="NAME=VALUE")
    sp.set_defaults(func=cmd_closed_form)

    for name, func, text in (("sweep", cmd_sweep, "run a parameter grid, CSV output"),
                             ("compare", cmd_compare, "pairwise deviations between methods")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config")
        sp.add_argument("--set", "-s", action="append", metavar="KEY=VALUE",
                        help="override a configuration key")
        sp.set_defaults(func=func)

    sp = sub.add_parser("reproduce", help="run a figure preset")
    sp.add_argument("figure", choices=runner.FIGURES)
    sp.add_argument("--outdir", default=".")
    sp.add_argument("--set", "-s", action="append", metavar="KEY=VALUE")
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("transform-gap", help="tabulate the equivalent constant-gap profile")
    with_profile(sp)
    sp.add_argument("--target-gap", type=float)
    sp.add_argument("--points", type=int, default=201)
    sp.add_argument("--half-range", type=float, default=20.0)
    sp.set_defaults(func=cmd_transform_gap)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (NlsweepError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
