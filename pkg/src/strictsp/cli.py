"""Command-line entry point: ``strictsp {check,envelope,strictify,objective,demo}``.

Exit codes: 0 strictly SP, 1 weakly SP only, 2 not weakly SP, 3 input error,
4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path

from . import __version__
from .envelope import INTERPOLATIONS, envelope_payments, envelope_residual
from .errors import ConvergenceError, MechanismError, MechanismFormatError, PreconditionError
from .io import export_csv, load_mechanism, save_mechanism
from .mechanism import (
    Feasibility,
    TypeGrid,
    make_constant,
    make_posted_price,
    make_random_monotone,
    make_second_price,
)
from .objective import ObjectiveKind, ObjectiveSpec, evaluate_objective, objective_gap
from .payoff import PayoffModel
from .strictify import MixingRule, strictify
from .verify import characterize, check_ir, verify

EXIT_STRICT, EXIT_WEAK, EXIT_NOT_SP, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3, 4
DEMOS = ("second_price", "posted_price", "constant", "random_monotone")


def verdict_code(weak, strict):
    if strict:
        return EXIT_STRICT
    return EXIT_WEAK if weak else EXIT_NOT_SP


def _executor(args):
    return ThreadPoolExecutor(max_workers=args.threads) if args.threads > 1 else nullcontext()


def _write_report(args, command, result):
    report = {
        "tool": "strictsp",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "tolerances": {"tol": args.tol, "interpolation": args.interpolation},
        "result": result,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    return report


def _grid(args):
    if args.grid:
        return TypeGrid([float(v) for v in args.grid.split(",")])
    return TypeGrid.uniform(args.grid_points)


# ----------------------------------------------------------------- commands
def cmd_check(args):
    mech, model = load_mechanism(args.mechanism)
    with _executor(args) as pool:
        rep = characterize(model, mech, tol=args.tol, strict_tol=args.strict_margin,
                           interpolation=args.interpolation, executor=pool)
    res = rep.verification
    result = {"characterization": rep.to_dict()}
    if args.ir is not None:
        try:
            result["ir"] = check_ir(model, mech, args.ir if len(args.ir) > 1 else args.ir[0],
                                    tol=args.tol).to_dict()
        except PreconditionError as exc:
            result["ir"] = {"error": str(exc)}
    code = EXIT_INTERNAL if not rep.consistent else verdict_code(res.weak_sp, res.strict_sp)
    result["exit_code"] = code
    _write_report(args, "check", result)
    print(f"weak SP: {res.weak_sp}  strict SP: {res.strict_sp}  min loss: {res.min_loss:.6g}  "
          f"monotonicity: {res.monotonicity.name}  envelope residual: {res.envelope_residual:.3g}")
    for w in res.witnesses[:3]:
        print(f"  witness: agent {w.agent + 1} type {w.true_type:g} vs report {w.report:g} "
              f"against {list(w.t_other)}: loss {w.loss:.6g}")
    if not rep.consistent:
        print(f"INTERNAL_INCONSISTENCY: {', '.join(rep.violated)}")
    if "ir" in result:
        print(f"IR: {result['ir']}")
    return code


def cmd_envelope(args):
    mech, model = load_mechanism(args.mechanism)
    before = envelope_residual(model, mech, args.interpolation)
    env = envelope_payments(model, mech, interpolation=args.interpolation)
    if args.out:
        save_mechanism(args.out, env, model)
    if args.csv:
        export_csv(args.csv, env)
    res = verify(model, env, tol=args.tol, interpolation=args.interpolation)
    code = verdict_code(res.weak_sp, res.strict_sp)
    _write_report(args, "envelope", {"residual_before": before,
                                     "verification": res.to_dict(), "exit_code": code})
    print(f"envelope residual of input: {before:.6g}; recomputed payments "
          f"{'written to ' + args.out if args.out else 'not written'}")
    return code


def cmd_strictify(args):
    mech, model = load_mechanism(args.mechanism)
    try:
        out = strictify(model, mech, args.eps, rule=MixingRule(args.rule),
                        canonicalize=not args.no_canonicalize,
                        interpolation=args.interpolation, tol=args.tol)
    except ConvergenceError as exc:
        _write_report(args, "strictify", {"error": str(exc), "exit_code": EXIT_WEAK})
        print(f"strictify failed: {exc}")
        return EXIT_WEAK
    except PreconditionError as exc:
        code = EXIT_NOT_SP if "strategy-proof" in str(exc) else EXIT_INPUT
        _write_report(args, "strictify", {"error": str(exc), "exit_code": code})
        print(f"strictify refused input: {exc}")
        return code
    if args.out:
        save_mechanism(args.out, out.mech, model)
    code = verdict_code(True, out.strict_sp)
    _write_report(args, "strictify", {"strictified": out.to_dict(), "exit_code": code})
    flags = [f for f in ("fallback", "heuristic", "relaxed_feasibility") if getattr(out, f)]
    print(f"delta={out.delta:g} sup_dx={out.sup_dx:.3g} sup_dp={out.sup_dp:.3g} "
          f"strict margin={out.strict_margin:.3g} strict SP={out.strict_sp}"
          + (f" [{', '.join(flags)}]" if flags else ""))
    return code


def _objective_spec(args):
    weights = None
    if args.dist != "uniform":
        weights = json.loads(Path(args.dist).read_text())
    return ObjectiveSpec(ObjectiveKind(args.kind), weights)


def cmd_objective(args):
    mech, _ = load_mechanism(args.mechanism)
    spec = _objective_spec(args)
    if args.other is None:
        value = evaluate_objective(mech, spec)
        _write_report(args, "objective", {"kind": args.kind, "value": value, "exit_code": 0})
        print(f"{args.kind}: {value:.12g}")
        return 0
    other, _ = load_mechanism(args.other)
    gap = objective_gap(mech, other, spec)
    _write_report(args, "objective", {"gap": gap.to_dict(), "exit_code": 0})
    print(f"{args.kind}: {gap.original:.12g} -> {gap.strictified:.12g}  gap {gap.gap:.6g}  "
          f"bound {gap.bound:.6g}  within bound: {gap.within_bound}")
    return 0


def cmd_demo(args):
    grid = _grid(args)
    model = PayoffModel.product()
    name = args.name
    if name == "second_price":
        mech = make_second_price(args.agents, grid)
    elif name == "posted_price":
        mech = make_posted_price(grid, args.price)
    elif name == "constant":
        mech = make_constant(args.agents, grid, args.x, args.p, Feasibility.SUM_LE_1)
    else:
        raw = make_random_monotone(args.agents, grid, args.seed, strict=args.strict)
        mech = envelope_payments(model, raw, interpolation=args.interpolation)
    out = args.out or f"{name}.json"
    save_mechanism(out, mech, model)
    _write_report(args, "demo", {"written": out, "exit_code": 0})
    print(f"wrote {name} demo ({mech.n_agents} agents, {mech.m}-point grid) to {out}")
    return 0


# ------------------------------------------------------------------ parsing
def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--tol", type=float, default=1e-9, help="loss tolerance (default 1e-9)")
    shared.add_argument("--threads", type=int, default=1, help="worker threads for verification")
    shared.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    shared.add_argument("--out", help="output mechanism file")
    shared.add_argument("--report", help="JSON report path")
    shared.add_argument("--interpolation", choices=INTERPOLATIONS, default="linear",
                        help="extension of grid allocations between grid points")

    parser = argparse.ArgumentParser(prog="strictsp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"strictsp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[shared], help="verify strategy-proofness")
    p.add_argument("mechanism")
    p.add_argument("--strict-margin", type=float, default=None,
                   help="loss threshold for strictness (default: --tol)")
    p.add_argument("--ir", type=float, nargs="+", metavar="W",
                   help="outside option, one value or one per agent")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("envelope", parents=[shared], help="recompute envelope payments")
    p.add_argument("mechanism")
    p.add_argument("--csv", help="also export the table as CSV")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("strictify", parents=[shared], help="perturb to strict strategy-proofness")
    p.add_argument("mechanism")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--rule", choices=[r.value for r in MixingRule], default="linear")
    p.add_argument("--no-canonicalize", action="store_true",
                   help="measure closeness against the input payments as given")
    p.set_defaults(func=cmd_strictify)

    p = sub.add_parser("objective", parents=[shared], help="evaluate a principal objective")
    p.add_argument("mechanism")
    p.add_argument("other", nargs="?", help="second mechanism: report the objective gap")
    p.add_argument("--kind", choices=[k.value for k in ObjectiveKind if k is not ObjectiveKind.CUSTOM],
                   default="revenue")
    p.add_argument("--dist", default="uniform", help="'uniform' or a JSON file of prior weights")
    p.set_defaults(func=cmd_objective)

    p = sub.add_parser("demo", parents=[shared], help="write a builtin mechanism file")
    p.add_argument("--name", choices=DEMOS, required=True)
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--grid-points", type=int, default=3)
    p.add_argument("--grid", help="comma-separated grid, overrides --grid-points")
    p.add_argument("--price", type=float, default=0.5)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--strict", action="store_true", help="strictly monotone random fixture")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MechanismFormatError as exc:
        print(f"malformed mechanism file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError, MechanismError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
