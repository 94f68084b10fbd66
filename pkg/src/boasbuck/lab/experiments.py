"""Convergence sweeps and theorem-bound checks over (n, x) grids."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..bbsystem import resolve_system
from ..errors import BoasBuckError
from ..moments import central_moments
from ..operators import OperatorConfig, evaluate
from ..smoothness import (
    GridFunction,
    PiecewiseFunction,
    lipschitz_fit,
    modulus_classical,
    modulus_ditzian_totik,
    phi,
    total_variation,
    weighted_norm,
)
from .catalog import get_function

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "Row",
    "Assertion",
    "RUNNERS",
    "run",
    "run_suite",
    "run_uniform_convergence",
    "run_modulus_bound",
    "run_lipschitz_bound",
    "run_dt_bound",
    "run_weighted_convergence",
    "run_bv_decay",
    "emit_csv",
    "read_csv",
    "fit_rate",
    "CSV_COLUMNS",
    "load_specs",
    "default_suite_path",
]

DEFAULT_N_GRID = (10, 20, 40, 80, 160, 320, 640)
DEFAULT_X_GRID = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0)
CHECKS = ("uniform", "modulus", "lipschitz", "dt-modulus", "weighted", "bv-decay")
OPERATORS = {"discrete": "discrete", "durrmeyer": "durrmeyer", "szasz": "szasz_durrmeyer",
             "szasz_durrmeyer": "szasz_durrmeyer"}
CSV_COLUMNS = ("experiment", "system", "fn", "n", "x", "op_value", "f_value",
               "abs_err", "bound_value", "ratio", "note")

# Values below this are treated as exact zeros in decay checks.
NOISE_FLOOR = 1e-10


@dataclass(frozen=True)
class ExperimentSpec:
    system: str = "exp1"
    operator: str = "durrmeyer"
    fn: str = "exp_neg"
    n_grid: tuple = DEFAULT_N_GRID
    x_grid: tuple = DEFAULT_X_GRID
    checks: tuple = ("uniform",)
    name: str = ""
    X_max: float = 50.0
    gammas: tuple = (0.0, 0.5, 1.0)
    r: float = 1.0
    alpha: float = 0.5
    uniform_tol: float = 0.25
    weighted_tols: tuple = (1e-8, 1e-3, 1e-2)
    dt_split: int = 40
    lipschitz_slack: float = 1.05

    def __post_init__(self):
        for attr in ("n_grid", "x_grid", "checks", "gammas", "weighted_tols"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "x_grid", tuple(float(x) for x in self.x_grid))
        if list(self.n_grid) != sorted(self.n_grid) or len(set(self.n_grid)) != len(self.n_grid):
            raise ValueError("n_grid must be strictly ascending")
        if not self.n_grid or self.n_grid[0] < 2:
            raise ValueError("n_grid entries must be >= 2")
        if any(x < 0 or x > self.X_max for x in self.x_grid):
            raise ValueError(f"x_grid must lie in [0, {self.X_max}]")
        if self.operator not in OPERATORS:
            raise ValueError(f"operator must be one of {sorted(OPERATORS)}")
        for c in self.checks:
            if c not in CHECKS:
                raise ValueError(f"unknown check {c!r}; known: {CHECKS}")
        get_function(self.fn)

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self):
        return asdict(self)


class Row(NamedTuple):
    experiment: str
    system: str
    fn: str
    n: int
    x: float
    op_value: float
    f_value: float
    abs_err: float
    bound_value: float = math.nan
    ratio: float = math.nan
    note: str = ""


class Assertion(NamedTuple):
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentResult:
    experiment: str
    system: str
    fn: str
    rows: list = field(default_factory=list)
    sup_errors: dict = field(default_factory=dict)
    rate: tuple = (math.nan, math.nan)  # (slope, rms residual) of log err vs log n
    assertions: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)

    def check(self, name, passed, detail=""):
        self.assertions.append(Assertion(name, bool(passed), detail))


# -- shared helpers -------------------------------------------------------------------


def _setup(spec):
    sys = resolve_system(spec.system)
    entry = get_function(spec.fn)
    return sys, entry.f, OPERATORS[spec.operator]


def _f_at(f, x):
    return float(np.asarray(f(np.array([float(x)])), dtype=float)[0])


def _op(sys, kind, f, n, x):
    try:
        return evaluate(sys, OperatorConfig(kind=kind, n=n), f, x).value
    except BoasBuckError as exc:
        raise type(exc)(f"evaluation failed at n={n}, x={x}: {exc}") from exc


def fit_rate(ns, errs):
    """Least-squares slope of ``log err`` on ``log n`` over the upper half of the grid."""
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    k = int(math.ceil(ns.size / 2))
    ns, errs = ns[-k:], errs[-k:]
    if ns.size < 2 or np.any(errs <= 1e-14) or not np.all(np.isfinite(errs)):
        return math.nan, math.nan
    X, Y = np.log(ns), np.log(errs)
    slope, icpt = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + icpt)
    return float(slope), float(np.sqrt(np.mean(resid ** 2)))


def _mu2(sys, n, x):
    return max(central_moments(sys, n, x)[1], 0.0)


def _decreasing(values, slack=1.0, floor=NOISE_FLOOR):
    return all(b <= slack * a + floor for a, b in zip(values, values[1:]))


def _base_result(spec, check):
    return ExperimentResult(spec.name or f"{check}:{spec.fn}", _system_name(spec), spec.fn)


def _system_name(spec):
    return resolve_system(spec.system).name


# -- runners ------------------------------------------------------------------------------


def run_uniform_convergence(spec: ExperimentSpec) -> ExperimentResult:
    sys, f, kind = _setup(spec)
    res = _base_result(spec, "uniform")
    for n in spec.n_grid:
        sup = 0.0
        for x in spec.x_grid:
            val = _op(sys, kind, f, n, x)
            fx = _f_at(f, x)
            err = abs(val - fx)
            sup = max(sup, err)
            res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err))
        res.sup_errors[n] = sup
    sups = [res.sup_errors[n] for n in spec.n_grid]
    res.rate = fit_rate(spec.n_grid, sups)
    res.check("uniform: sup error non-increasing (10% slack)", _decreasing(sups, 1.1),
              " ".join(f"{v:.3e}" for v in sups))
    res.check(f"uniform: sup error at n={spec.n_grid[-1]} <= {spec.uniform_tol}",
              sups[-1] <= spec.uniform_tol, f"{sups[-1]:.3e}")
    return res


def run_modulus_bound(spec: ExperimentSpec) -> ExperimentResult:
    """``|B f - f(x)| <= 2 omega(f; sqrt(mu2))`` plus twice the modulus grid resolution."""
    sys, f, kind = _setup(spec)
    res = _base_result(spec, "modulus")
    violations = []
    for n in spec.n_grid:
        sup = 0.0
        for x in spec.x_grid:
            val = _op(sys, kind, f, n, x)
            fx = _f_at(f, x)
            err = abs(val - fx)
            mu2 = _mu2(sys, n, x)
            if mu2 > 0:
                om = modulus_classical(f, math.sqrt(mu2), (0.0, spec.X_max))
                bound, slack = 2.0 * om.value, 2.0 * om.resolution
            else:
                bound, slack = 0.0, NOISE_FLOOR
            ratio = err / bound if bound > 0 else math.nan
            if err > bound + slack:
                violations.append((n, x, err, bound))
            res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err, bound, ratio,
                                f"slack={slack:.12e}"))
            sup = max(sup, err)
        res.sup_errors[n] = sup
    res.rate = fit_rate(spec.n_grid, [res.sup_errors[n] for n in spec.n_grid])
    res.check("modulus bound: zero violations", not violations, f"{len(violations)} violations {violations[:3]}")
    return res


def run_lipschitz_bound(spec: ExperimentSpec) -> ExperimentResult:
    sys, f, kind = _setup(spec)
    res = _base_result(spec, "lipschitz")
    K = lipschitz_fit(f, spec.r, (0.0, spec.X_max))
    res.extras["K_fit"] = K
    violations = []
    for n in spec.n_grid:
        for x in spec.x_grid:
            if x <= 0:
                continue
            val = _op(sys, kind, f, n, x)
            fx = _f_at(f, x)
            err = abs(val - fx)
            bound = K.value / x ** (spec.r / 2) * _mu2(sys, n, x) ** (spec.r / 2)
            ratio = err / bound if bound > 0 else math.nan
            if err > spec.lipschitz_slack * bound + 1e-12:
                violations.append((n, x, err, bound))
            res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err, bound, ratio,
                                f"K_fit={K.value:.12e};r={spec.r}"))
    res.check(f"lipschitz bound: zero violations ({spec.lipschitz_slack} slack)", not violations,
              f"{len(violations)} violations {violations[:3]}")
    return res


def run_dt_bound(spec: ExperimentSpec) -> ExperimentResult:
    """Ratio ``|B f - f(x)| / omega_{phi^gamma}(f; phi(x)**(1-gamma) / sqrt(n))`` and its boundedness."""
    sys, f, kind = _setup(spec)
    res = _base_result(spec, "dt-modulus")
    values = {}
    for n in spec.n_grid:
        for x in spec.x_grid:
            val = _op(sys, kind, f, n, x)
            values[n, x] = (val, _f_at(f, x))
    for gamma in spec.gammas:
        early, late = [], []
        for n in spec.n_grid:
            for x in spec.x_grid:
                val, fx = values[n, x]
                err = abs(val - fx)
                delta = float(phi(x)) ** (1.0 - gamma) / math.sqrt(n)
                note = f"gamma={gamma}"
                if delta <= 0:
                    res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err,
                                        math.nan, math.nan, note + ";degenerate"))
                    continue
                om = modulus_ditzian_totik(f, delta, gamma, (0.0, spec.X_max))
                if om.value < 1e-14:
                    res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err,
                                        om.value, math.nan, note + ";degenerate"))
                    continue
                ratio = err / om.value
                (early if n <= spec.dt_split else late).append(ratio)
                res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err, om.value, ratio, note))
        if early and late:
            e, l = max(early), max(late)
            res.extras[f"gamma={gamma}"] = (e, l)
            res.check(f"dt ratio bounded, gamma={gamma}: max(n>{spec.dt_split}) <= 2 max(n<={spec.dt_split})",
                      l <= 2.0 * e, f"early={e:.4e} late={l:.4e}")
    return res


def run_weighted_convergence(spec: ExperimentSpec) -> ExperimentResult:
    """``||B t^r - x^r||_{x^2}`` for r = 0, 1, 2 on the x grid, plus the weighted-sup corollary for ``fn``."""
    sys, f, kind = _setup(spec)
    res = _base_result(spec, "weighted")
    xs = np.array(spec.x_grid)
    order = np.argsort(xs)
    norms = {r: [] for r in range(3)}
    corollary = []
    for n in spec.n_grid:
        for r in range(3):
            g = (lambda s: np.ones_like(s)) if r == 0 else (lambda s, r=r: np.asarray(s, dtype=float) ** r)
            vals = np.array([_op(sys, kind, g, n, x) for x in xs])
            target = xs ** r
            diff = vals - target
            norm = weighted_norm(GridFunction(xs[order], diff[order])).value
            norms[r].append(norm)
            for x, v, t in zip(xs, vals, target):
                err = abs(v - t)
                res.rows.append(Row(res.experiment, res.system, f"t^{r}", n, float(x), float(v), float(t), err,
                                    norm, err / (1.0 + x * x), "weighted-norm"))
        cvals = []
        for x in xs:
            val = _op(sys, kind, f, n, x)
            fx = _f_at(f, x)
            w = abs(val - fx) / (1.0 + x * x) ** (1.0 + spec.alpha)
            cvals.append(w)
            res.rows.append(Row(res.experiment, res.system, spec.fn, n, float(x), val, fx, abs(val - fx),
                                math.nan, w, f"corollary;alpha={spec.alpha}"))
        corollary.append(max(cvals))
    last = spec.n_grid[-1]
    for r in range(3):
        tol = spec.weighted_tols[r]
        res.extras[f"r={r}"] = norms[r]
        res.check(f"weighted r={r}: norm at n={last} <= {tol:g}", norms[r][-1] <= tol, f"{norms[r][-1]:.3e}")
        res.check(f"weighted r={r}: non-increasing (10% slack)", _decreasing(norms[r], 1.1),
                  " ".join(f"{v:.3e}" for v in norms[r]))
    res.extras["corollary"] = corollary
    res.check("corollary: weighted sup error non-increasing (10% slack)", _decreasing(corollary, 1.1),
              " ".join(f"{v:.3e}" for v in corollary))
    return res


def _bv_pieces(pf: PiecewiseFunction, x, n):
    root = math.sqrt(n)
    h = x / root
    lo, hi = max(x - h, pf.lo), x + h
    var_left = total_variation(pf, lo, x, center=x)
    var_right = total_variation(pf, x, hi, center=x)
    m = int(math.floor(root))
    sum_left = sum(total_variation(pf, max(x - x / j, pf.lo), x, center=x) for j in range(1, m + 1))
    sum_right = sum(total_variation(pf, x, x + x / j, center=x) for j in range(1, m + 1))
    return var_left, var_right, sum_left, sum_right


def run_bv_decay(spec: ExperimentSpec) -> ExperimentResult:
    """Error decay at kinks and the computable pieces of the bounded-variation estimate.

    The full inequality carries an unknown constant and is not asserted.
    """
    sys, f, kind = _setup(spec)
    if not isinstance(f, PiecewiseFunction):
        raise ValueError("bv-decay needs a piecewise test function")
    res = _base_result(spec, "bv-decay")
    for x in spec.x_grid:
        if x <= 0:
            continue
        left, right = f.derivative_limits(x)
        errs = []
        for n in spec.n_grid:
            val = _op(sys, kind, f, n, x)
            fx = _f_at(f, x)
            err = abs(val - fx)
            errs.append(err)
            mu1, mu2 = central_moments(sys, n, x)
            vl, vr, sl, sr = _bv_pieces(f, x, n)
            note = ";".join(f"{k}={v:.12e}" for k, v in (
                ("mu1", mu1), ("mu2", mu2), ("fprime_avg", 0.5 * (left + right)),
                ("fprime_jump", right - left), ("var_left", vl), ("var_right", vr),
                ("sum_left", sl), ("sum_right", sr)))
            res.rows.append(Row(res.experiment, res.system, spec.fn, n, x, val, fx, err, math.nan, math.nan, note))
        res.extras[f"x={x}"] = errs
        tail = [e for n, e in zip(spec.n_grid, errs) if n >= 40]
        strict = all(b < a or (a <= NOISE_FLOOR and b <= NOISE_FLOOR) for a, b in zip(tail, tail[1:]))
        res.check(f"bv x={x}: error strictly decreasing from n=40", strict, " ".join(f"{v:.3e}" for v in errs))
        res.check(f"bv x={x}: error(n_max) <= error(n_min)/4", errs[-1] <= errs[0] / 4 + NOISE_FLOOR,
                  f"{errs[-1]:.3e} vs {errs[0]:.3e}")
    return res


RUNNERS = {
    "uniform": run_uniform_convergence,
    "modulus": run_modulus_bound,
    "lipschitz": run_lipschitz_bound,
    "dt-modulus": run_dt_bound,
    "weighted": run_weighted_convergence,
    "bv-decay": run_bv_decay,
}


def run(spec: ExperimentSpec):
    """All checks of ``spec``, one result per check."""
    return [RUNNERS[check](spec) for check in spec.checks]


def run_suite(specs):
    results = []
    for s in specs:
        results.extend(run(s))
    return results


# -- csv --------------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12e}"


def emit_csv(results, path):
    """Write rows of one or more results, sorted by (experiment, system, fn, note, n, x)."""
    if isinstance(results, ExperimentResult):
        results = [results]
    rows = [row for r in results for row in r.rows]
    rows.sort(key=lambda r: (r.experiment, r.system, r.fn, r.note.split(";")[0], r.n, r.x, r.note))
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in rows:
                w.writerow([r.experiment, r.system, r.fn, _fmt(r.n), _fmt(r.x), _fmt(r.op_value),
                            _fmt(r.f_value), _fmt(r.abs_err), _fmt(r.bound_value), _fmt(r.ratio), r.note])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path):
    with Path(path).open(encoding="utf-8", newline="") as fh:
        out = []
        for d in csv.DictReader(fh):
            out.append(Row(d["experiment"], d["system"], d["fn"], int(d["n"]), float(d["x"]),
                           float(d["op_value"]), float(d["f_value"]), float(d["abs_err"]),
                           float(d["bound_value"]), float(d["ratio"]), d["note"]))
        return out


def default_suite_path():
    return Path(__file__).resolve().parent.parent / "data" / "suite.json"


def load_specs(path_or_data):
    """Specs from a JSON file/dict holding one spec or ``{"experiments": [...]}``."""
    data = path_or_data
    if not isinstance(data, dict):
        data = json.loads(Path(path_or_data).read_text(encoding="utf-8"))
    items = data.get("experiments", [data])
    return [ExperimentSpec.from_dict(d) for d in items]
