"""Boas-Buck generating-function systems and the Theta_j value tables.

A system is five power series ``xi, S, T, U, V`` with the generating identity

    S(s) * xi(y**2 T(s) + y U(s) + V(s)) = sum_j Theta_j(y) s**j.

``T``, ``U`` and ``V`` are stored in shifted form: ``T(s) = sum_j r_j s**(j+1)``,
``U(s) = sum_j u_j s**(j+2)``, ``V(s) = sum_j v_j s**(j+3)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .errors import BoasBuckError, DegenerateNormalizerError, PositivityViolationError, TruncationFailureError
from .series import (
    TruncatedSeries,
    compose_scaled,
    exp_series,
    series_compose,
    series_derivatives_at_one,
    series_mul,
)

__all__ = [
    "BoasBuckSystem",
    "ThetaTable",
    "Check",
    "ValidationReport",
    "validate_system",
    "p_of_x",
    "theta_values",
    "weight_distribution",
    "load_system",
    "builtin_system",
    "BUILTIN_SYSTEMS",
]

XI_KINDS = ("exp", "series-only")
SHIFTS = {"xi": 0, "s": 0, "t": 1, "u": 2, "v": 3}

UNIT_ROUNDOFF = 2.0 ** -53
# Cody-Waite split of ln 2; E * LN2_HI is exact for |E| < 2**20.
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10

# Plain (unscaled) composition is used only well inside the double range.
PLAIN_MAX_ORDER = 150
PLAIN_MAX_ARG = 100.0

DEFAULT_EPS = 1e-12
DEFAULT_CAP = 20000


def _as_tuple(values):
    return tuple(float(v) for v in np.asarray(values, dtype=float).reshape(-1))


@dataclass(frozen=True)
class BoasBuckSystem:
    """The series ``xi, S, T, U, V`` plus evaluators for ``xi`` and its derivatives.

    ``xi_kind="exp"`` wires ``xi = xi' = xi'' = exp`` and ignores ``xi_coeffs``
    beyond documentation; ``"series-only"`` treats ``xi`` as the polynomial
    given by ``xi_coeffs``.
    """

    xi_coeffs: tuple
    s_coeffs: tuple
    t_coeffs: tuple = ()
    u_coeffs: tuple = ()
    v_coeffs: tuple = ()
    xi_kind: str = "exp"
    sigma: float = 2.0
    name: str = "custom"

    def __post_init__(self):
        if self.xi_kind not in XI_KINDS:
            raise ValueError(f"xi_kind must be one of {XI_KINDS}, got {self.xi_kind!r}")
        for attr in ("xi_coeffs", "s_coeffs", "t_coeffs", "u_coeffs", "v_coeffs"):
            object.__setattr__(self, attr, _as_tuple(getattr(self, attr)))
        if self.xi_kind == "series-only" and not self.xi_coeffs:
            raise ValueError("series-only systems need xi_coeffs")
        if not self.s_coeffs:
            raise ValueError("s_coeffs must not be empty")

    # -- derivative data at s = 1 -------------------------------------------

    @cached_property
    def s_at_one(self):
        return series_derivatives_at_one(self.s_coeffs, 0)

    @cached_property
    def t_at_one(self):
        return series_derivatives_at_one(self.t_coeffs, 1)

    @cached_property
    def u_at_one(self):
        return series_derivatives_at_one(self.u_coeffs, 2)

    @cached_property
    def v_at_one(self):
        return series_derivatives_at_one(self.v_coeffs, 3)

    # -- dense series ---------------------------------------------------------

    def series(self, which, order):
        """Dense :class:`TruncatedSeries` of order ``order`` for ``which`` in xi/s/t/u/v."""
        if which == "xi" and self.xi_kind == "exp":
            return exp_series(order)
        coeffs = getattr(self, f"{which}_coeffs")
        return TruncatedSeries.from_coeffs(coeffs, order=order, shift=SHIFTS[which])

    def a_coeffs(self, y, order):
        """Dense coefficients of ``A(s) = y**2 T(s) + y U(s) + V(s)``."""
        a = np.zeros(order + 1)
        for which, scale in (("t", y * y), ("u", y), ("v", 1.0)):
            raw = getattr(self, f"{which}_coeffs")
            sh = SHIFTS[which]
            if sh > order or not raw:
                continue
            m = min(len(raw), order + 1 - sh)
            a[sh:sh + m] += scale * np.asarray(raw[:m])
        return a

    def xi_scaled_coeffs(self, order, c=1.0):
        """``p_k * c**k`` for ``k <= order`` as (mantissa, base-2 exponent) arrays."""
        mant = np.empty(order + 1)
        expo = np.empty(order + 1, dtype=np.int64)
        if self.xi_kind == "exp":
            m, e = 1.0, 0
            for k in range(order + 1):
                if k:
                    m, de = math.frexp(m * c / k)
                    e += de
                mant[k], expo[k] = m, e
            return mant, expo
        raw = np.zeros(order + 1)
        n = min(len(self.xi_coeffs), order + 1)
        raw[:n] = self.xi_coeffs[:n]
        cm, ce = 1.0, 0
        for k in range(order + 1):
            if k:
                cm, de = math.frexp(cm * c)
                ce += de
            m, e = math.frexp(raw[k] * cm)
            mant[k], expo[k] = m, e + ce
        return mant, expo

    # -- xi evaluators ---------------------------------------------------------

    def _poly(self, t, deriv=0):
        c = np.polynomial.polynomial.polyder(np.asarray(self.xi_coeffs), deriv) if deriv else np.asarray(self.xi_coeffs)
        return float(np.polynomial.polynomial.polyval(t, c)) if c.size else 0.0

    def xi_eval(self, t):
        return math.exp(t) if self.xi_kind == "exp" else self._poly(t)

    def xi_d1_eval(self, t):
        return math.exp(t) if self.xi_kind == "exp" else self._poly(t, 1)

    def xi_d2_eval(self, t):
        return math.exp(t) if self.xi_kind == "exp" else self._poly(t, 2)

    def xi_log(self, t):
        """``ln xi(t)``, finite even where ``xi(t)`` overflows."""
        if self.xi_kind == "exp":
            return float(t)
        val, logscale = _poly_scaled(self.xi_coeffs, t)
        if val <= 0.0:
            raise DegenerateNormalizerError(f"xi({t}) = {val * math.exp(logscale)} is not positive")
        return math.log(val) + logscale

    def xi_ratio(self, t, k):
        """``xi^(k)(t) / xi(t)`` for ``k`` in 1, 2."""
        if self.xi_kind == "exp":
            return 1.0
        num, ln = _poly_scaled(np.polynomial.polynomial.polyder(np.asarray(self.xi_coeffs), k), t)
        den, ld = _poly_scaled(self.xi_coeffs, t)
        if den == 0.0:
            raise DegenerateNormalizerError(f"xi({t}) vanishes")
        return num / den * math.exp(ln - ld)

    # -- io ------------------------------------------------------------------

    def to_dict(self):
        return {
            "name": self.name,
            "xi_kind": self.xi_kind,
            "xi_coeffs": list(self.xi_coeffs),
            "s_coeffs": list(self.s_coeffs),
            "t_coeffs": list(self.t_coeffs),
            "u_coeffs": list(self.u_coeffs),
            "v_coeffs": list(self.v_coeffs),
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, data, name=None):
        return cls(
            xi_coeffs=data.get("xi_coeffs", ()),
            s_coeffs=data["s_coeffs"],
            t_coeffs=data.get("t_coeffs", ()),
            u_coeffs=data.get("u_coeffs", ()),
            v_coeffs=data.get("v_coeffs", ()),
            xi_kind=data.get("xi_kind", "series-only"),
            sigma=float(data.get("sigma", 2.0)),
            name=name or data.get("name", "custom"),
        )


def _poly_scaled(coeffs, t):
    """Evaluate a polynomial as ``(value, log_scale)`` with value * exp(log_scale) = P(t)."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return 0.0, 0.0
    if abs(t) <= 1.0:
        return float(np.polynomial.polynomial.polyval(t, c)), 0.0
    d = c.size - 1
    acc = 0.0
    inv = 1.0 / t
    for coef in c:
        acc = acc * inv + coef
    if t < 0 and d % 2:
        acc = -acc
    return acc, d * math.log(abs(t))


def _exp_minus_pow2(log_value, e):
    """``exp(log_value - e * ln 2)`` without losing the low bits of ``e * ln 2``."""
    try:
        return math.exp((log_value - e * LN2_HI) - e * LN2_LO)
    except OverflowError:
        # The table holds a negligible share of the mass; its weights are zero.
        return math.inf


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    hard: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    system: str
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.hard)

    @property
    def warnings(self):
        return [c for c in self.checks if not c.hard and not c.passed]

    def failures(self):
        return [c for c in self.checks if c.hard and not c.passed]

    def lines(self):
        for c in self.checks:
            tag = "PASS" if c.passed else ("FAIL" if c.hard else "WARN")
            yield f"[{tag}] {c.name}: {c.detail}"


def validate_system(sys, tol=1e-10, y_grid=None, j_check=512, xi_grid=None):
    """Check the admissibility conditions of ``sys``.

    Positivity of ``xi`` and of ``Theta_j`` is sampled, not proven.  The
    nonvanishing of the coefficient families is reported as warnings only.
    """
    if y_grid is None:
        y_grid = np.round(np.arange(0, 501) * 0.1, 10)
    if xi_grid is None:
        xi_grid = np.concatenate([np.linspace(0.0, 50.0, 501), np.geomspace(50.0, 700.0, 50)])
    checks = []

    s1 = sys.s_at_one[0]
    checks.append(Check("S(1) > 0", s1 > 0, True, f"S(1) = {s1:.12g}"))
    _, t1, t2 = sys.t_at_one
    checks.append(Check("T'(1) = 0", abs(t1) <= tol, True, f"T'(1) = {t1:.3g}"))
    checks.append(Check("T''(1) = 0", abs(t2) <= tol, True, f"T''(1) = {t2:.3g}"))
    u1 = sys.u_at_one[1]
    checks.append(Check("U'(1) = 1", abs(u1 - 1.0) <= tol, True, f"U'(1) = {u1:.12g}"))

    xi_vals = np.array([sys.xi_eval(float(t)) for t in xi_grid])
    bad = xi_grid[xi_vals < 0]
    checks.append(Check("xi(t) >= 0 (sampled)", bad.size == 0, True,
                        f"{xi_grid.size} samples" + (f", first negative at t={bad[0]:.6g}" if bad.size else "")))

    worst = (0.0, None, None)
    detail = f"{len(y_grid)} points y in [{min(y_grid):g}, {max(y_grid):g}], j <= {j_check}"
    try:
        for y in y_grid:
            tab = theta_values(sys, float(y), j_check, check=False)
            w = tab.weights
            k = int(np.argmin(w))
            if w[k] < worst[0]:
                worst = (float(w[k]), float(y), k)
        ok = worst[0] >= -1e-12
        if not ok:
            detail += f"; Theta_{worst[2]}({worst[1]:g}) / normalizer = {worst[0]:.3g}"
    except BoasBuckError as exc:
        ok = False
        detail += f"; not computable: {exc}"
    checks.append(Check("Theta_j(y) >= 0 (sampled)", ok, True, detail))

    if sys.xi_kind == "series-only":
        checks.append(_nonvanishing("p_j != 0", sys.xi_coeffs))
    checks.append(_nonvanishing("q_j != 0", sys.s_coeffs))
    checks.append(_nonvanishing("r_j != 0", sys.t_coeffs))
    return ValidationReport(sys.name, tuple(checks))


def _nonvanishing(label, coeffs):
    c = np.asarray(coeffs, dtype=float)
    zeros = int(np.count_nonzero(c == 0.0))
    ok = c.size > 0 and zeros == 0
    detail = "series identically zero" if c.size == 0 or zeros == c.size else f"{zeros} zero coefficient(s)"
    return Check(label, ok, False, "all supplied coefficients nonzero" if ok else detail)


# -- Theta tables ---------------------------------------------------------------


def p_of_x(sys, n, x):
    """Argument of ``xi`` in the normalizer: ``n^2 x^2 T(1) + n x U(1) + V(1)``."""
    return n * n * x * x * sys.t_at_one[0] + n * x * sys.u_at_one[0] + sys.v_at_one[0]


@dataclass(frozen=True, eq=False)
class ThetaTable:
    """``Theta_0(y) .. Theta_J(y)`` and the normalizer, both scaled by ``2**-scale_exp``.

    ``tail_mass_bound`` is relative to the normalizer; ``roundoff`` is the
    floating-point floor below which it carries no information.
    """

    point: float
    values: np.ndarray
    normalizer: float
    scale_exp: int = 0
    tail_mass_bound: float = 0.0
    roundoff: float = 0.0

    @property
    def order(self):
        return self.values.size - 1

    @property
    def weights(self):
        return self.values / self.normalizer

    def true_values(self):
        return np.ldexp(self.values, self.scale_exp)

    def truncated(self, j_cut):
        vals = self.values[: j_cut + 1]
        tail = max(0.0, 1.0 - math.fsum(vals) / self.normalizer)
        return ThetaTable(self.point, vals, self.normalizer, self.scale_exp, tail,
                          _roundoff(j_cut, self.normalizer, self.scale_exp))


def _roundoff(order, normalizer, scale_exp):
    # Random-walk accumulation over `order` Horner steps, generous constant.
    return 16.0 * UNIT_ROUNDOFF * (math.sqrt(order + 1.0) + 1.0)


def theta_values(sys, y, order, check=True):
    """Coefficients ``Theta_0(y) .. Theta_order(y)`` of the generating identity."""
    if y < 0:
        raise ValueError(f"y must be nonnegative, got {y}")
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    y = float(y)
    a = sys.a_coeffs(y, order)
    arg = math.fsum(a)
    s_dense = sys.series("s", order)
    s1 = sys.s_at_one[0]
    if s1 <= 0:
        raise DegenerateNormalizerError(f"S(1) = {s1} is not positive")

    if order <= PLAIN_MAX_ORDER and arg <= PLAIN_MAX_ARG:
        comp = series_compose(sys.series("xi", order), TruncatedSeries(a))
        values = series_mul(s_dense, comp).coeffs
        scale_exp = 0
        xi_val = sys.xi_eval(arg)
        if xi_val <= 0:
            raise DegenerateNormalizerError(f"xi(p) = {xi_val} is not positive")
        normalizer = s1 * xi_val
    else:
        c = arg if arg > 1.0 else 1.0
        mant, expo = sys.xi_scaled_coeffs(order, c)
        r, scale_exp = compose_scaled(mant, expo, a / c)
        values = series_mul(s_dense, TruncatedSeries(r)).coeffs
        normalizer = s1 * _exp_minus_pow2(sys.xi_log(arg), scale_exp)

    values = np.array(values)
    values.setflags(write=False)
    tail = max(0.0, 1.0 - math.fsum(values) / normalizer)
    table = ThetaTable(y, values, normalizer, scale_exp, tail, _roundoff(order, normalizer, scale_exp))
    if check:
        low = float(np.min(values)) / normalizer
        if low < -1e-9:
            j = int(np.argmin(values))
            raise PositivityViolationError(
                f"Theta_{j}({y:g}) / normalizer = {low:.3g} < 0: system not positive or truncation too short"
            )
    return table


def _mean_index(sys, y):
    """``G'(1)/G(1)``: the mean of j under the weights, used to size the first table."""
    s0, s1, _ = sys.s_at_one
    da = y * y * sys.t_at_one[1] + y * sys.u_at_one[1] + sys.v_at_one[1]
    arg = y * y * sys.t_at_one[0] + y * sys.u_at_one[0] + sys.v_at_one[0]
    try:
        ratio = sys.xi_ratio(arg, 1)
    except (DegenerateNormalizerError, OverflowError):
        ratio = 1.0
    return max(0.0, s1 / s0 + ratio * da)


@lru_cache(maxsize=512)
def _weight_distribution_cached(sys, n, x, eps, cap):
    y = n * x
    mean = _mean_index(sys, y)
    order = int(math.ceil(mean + 12.0 * math.sqrt(2.0 * mean + 4.0))) + 16
    order = max(32, min(order, cap))
    while True:
        table = theta_values(sys, y, order)
        if table.tail_mass_bound <= eps + table.roundoff:
            break
        if order >= cap:
            raise TruncationFailureError(
                f"weights at n={n}, x={x} need more than {cap} terms "
                f"(tail {table.tail_mass_bound:.3g} > eps {eps:.3g})"
            )
        order = min(cap, 2 * order)
    cum = np.cumsum(table.values) / table.normalizer
    target = 1.0 - eps - table.roundoff
    j_cut = int(np.searchsorted(cum, target, side="left"))
    j_cut = min(j_cut, table.order)
    return table.truncated(j_cut), j_cut


def weight_distribution(sys, n, x, eps=DEFAULT_EPS, cap=DEFAULT_CAP):
    """Theta table at ``y = n x`` cut at the smallest ``J_cut`` with tail mass <= eps.

    The tail test allows for the table's rounding floor (see
    :attr:`ThetaTable.roundoff`); below that floor the tail cannot be resolved.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _weight_distribution_cached(sys, int(n), float(x), float(eps), int(cap))


# -- built-in systems -------------------------------------------------------------

_DATA = Path(__file__).with_name("data")
BUILTIN_SYSTEMS = {"exp1": "exp1.json", "exp2": "exp2.json"}


def load_system(path):
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    return BoasBuckSystem.from_dict(data, name=data.get("name", path.stem))


def builtin_system(name):
    key = name.lower().replace("-", "").replace("_", "")
    if key not in BUILTIN_SYSTEMS:
        raise KeyError(f"unknown built-in system {name!r}; choose from {sorted(BUILTIN_SYSTEMS)}")
    return load_system(_DATA / BUILTIN_SYSTEMS[key])


def resolve_system(ref):
    """A :class:`BoasBuckSystem`, a built-in name (``exp1``, ``EXP-2``) or a JSON path."""
    if isinstance(ref, BoasBuckSystem):
        return ref
    key = str(ref).lower().replace("-", "").replace("_", "")
    if key in BUILTIN_SYSTEMS:
        return builtin_system(key)
    return load_system(ref)
