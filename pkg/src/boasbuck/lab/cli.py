"""Command-line entry point.

Exit codes: 0 when every assertion holds, 1 on an assertion violation, 2 when
an evaluation (or input) error prevents a verdict.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from ..bbsystem import resolve_system, theta_values, validate_system
from ..errors import BoasBuckError
from ..moments import moment_report
from ..operators import OperatorConfig, evaluate
from .catalog import CATALOG, get_function
from .experiments import OPERATORS, default_suite_path, emit_csv, load_specs, run_suite

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2
MOMENT_TOL = 1e-7


def _cmd_validate(args):
    report = validate_system(resolve_system(args.system))
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _cmd_theta(args):
    table = theta_values(resolve_system(args.system), args.y, args.J)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["j", "theta", "weight"])
    for j, (t, w) in enumerate(zip(table.true_values(), table.weights)):
        out.writerow([j, f"{t:.12e}", f"{w:.12e}"])
    return EXIT_OK


def _cmd_moments(args):
    rep = moment_report(resolve_system(args.system), args.n, args.x)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["operator", "moment", "closed_form", "numeric", "abs_diff"])
    ok = True
    for label, name, a, b, d in rep.rows():
        out.writerow([label, name, f"{a:.12e}", f"{b:.12e}", f"{d:.12e}"])
        if not math.isnan(d) and d > MOMENT_TOL * (1.0 + abs(a)):
            ok = False
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_apply(args):
    entry = get_function(args.fn)
    cfg = OperatorConfig(kind=OPERATORS[args.op], n=args.n)
    ev = evaluate(resolve_system(args.system), cfg, entry.f, args.x)
    fx = float(np.asarray(entry.f(np.array([args.x])))[0])
    print(f"value={ev.value:.12e} f(x)={fx:.12e} abs_err={abs(ev.value - fx):.12e} "
          f"error_budget={ev.error_budget:.3e} j_range={ev.j_lo}..{ev.j_cut}")
    return EXIT_OK


def _cmd_experiment(args):
    source = default_suite_path() if args.spec == "suite" else args.spec
    results = run_suite(load_specs(source))
    if args.out:
        emit_csv(results, args.out)
    code = EXIT_OK
    for r in results:
        for a in r.assertions:
            print(f"[{'PASS' if a.passed else 'FAIL'}] {r.experiment} ({r.system}): {a.name}  {a.detail}")
            if not a.passed:
                code = EXIT_VIOLATION
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="boasbuck", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check positivity and normalization assumptions")
    v.add_argument("system", help="system JSON path or built-in name (exp1, exp2)")
    v.set_defaults(func=_cmd_validate)

    t = sub.add_parser("theta", help="print Theta_j(y) for j = 0..J")
    t.add_argument("system")
    t.add_argument("--y", type=float, required=True)
    t.add_argument("--J", type=int, required=True)
    t.set_defaults(func=_cmd_theta)

    m = sub.add_parser("moments", help="closed-form moments next to their numeric counterparts")
    m.add_argument("system")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--x", type=float, required=True)
    m.set_defaults(func=_cmd_moments)

    a = sub.add_parser("apply", help="evaluate one operator at one point")
    a.add_argument("system")
    a.add_argument("--op", choices=["discrete", "durrmeyer", "szasz"], default="durrmeyer")
    a.add_argument("--fn", choices=sorted(CATALOG), required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--x", type=float, required=True)
    a.set_defaults(func=_cmd_apply)

    e = sub.add_parser("experiment", help="run an experiment spec (or 'suite') and write CSV")
    e.add_argument("spec", help="spec JSON path, or 'suite' for the bundled suite")
    e.add_argument("--out", help="CSV output path")
    e.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BoasBuckError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
