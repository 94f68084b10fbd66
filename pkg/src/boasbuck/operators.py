"""The discrete, Baskakov-Durrmeyer and Szasz-Durrmeyer operators.

All three share the Boas-Buck weights ``w_j = Theta_j(n x) / (S(1) xi(p(x)))``
and differ only in what multiplies them:

* discrete:        ``f(j / n)``
* durrmeyer:       ``E f(S)``, ``S ~ Beta-prime(j, n+1)``  (``j >= 1``)
* szasz_durrmeyer: ``E f(S)``, ``S ~ Gamma(j+1, rate n)``

The Beta-prime kernel does not exist at ``j = 0``; by default that weight is a
point mass at ``s = 0`` (it multiplies ``f(0)``), which keeps ``B~_n 1 = 1``.

``f`` is any vectorized callable on ``[0, inf)``.  Objects with a ``pieces``
attribute (see :class:`boasbuck.smoothness.PiecewiseFunction`) are integrated
exactly piece by piece with incomplete beta/gamma functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy import special as sp

from . import special
from .bbsystem import weight_distribution
from .special import DEFAULT_QUAD, QuadratureSpec

__all__ = [
    "OperatorConfig",
    "Evaluation",
    "KernelCDF",
    "evaluate",
    "apply_discrete",
    "apply_durrmeyer",
    "apply_szasz_durrmeyer",
    "apply",
    "kernel_cdf",
    "kernel_cdf_function",
]

KINDS = ("discrete", "durrmeyer", "szasz_durrmeyer")
J0_CONVENTIONS = ("point-mass-at-zero", "drop")


@dataclass(frozen=True)
class OperatorConfig:
    kind: str = "durrmeyer"
    n: int = 10
    trunc_eps: float = 1e-12
    quad: QuadratureSpec = field(default_factory=lambda: DEFAULT_QUAD)
    j0_convention: str = "point-mass-at-zero"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 < self.trunc_eps <= 1e-3:
            raise ValueError(f"trunc_eps must lie in (0, 1e-3], got {self.trunc_eps}")
        if self.j0_convention not in J0_CONVENTIONS:
            raise ValueError(f"j0_convention must be one of {J0_CONVENTIONS}")
        object.__setattr__(self, "n", int(self.n))

    def with_(self, **changes):
        return replace(self, **changes)


class Evaluation(NamedTuple):
    value: float
    error_budget: float
    j_lo: int
    j_cut: int


def _vectorized(f) -> Callable:
    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(f(s), dtype=float)
        if out.shape != s.shape:
            out = np.vectorize(lambda v: float(f(float(v))), otypes=[float])(s)
        return out

    return g


def _active_weights(sys, cfg, x):
    """Weights restricted to ``j_lo..j_cut``; head and tail each hold <= trunc_eps mass."""
    table, j_cut = weight_distribution(sys, cfg.n, x, eps=cfg.trunc_eps)
    w = table.weights
    head = np.cumsum(w)
    j_lo = int(np.searchsorted(head, cfg.trunc_eps, side="right"))
    j_lo = min(j_lo, j_cut)
    dropped = float(head[j_lo - 1]) if j_lo > 0 else 0.0
    return w[j_lo:], j_lo, j_cut, dropped + table.tail_mass_bound + table.roundoff


def _pieces(f):
    return getattr(f, "pieces", None)


def _piecewise_expectations(pieces, js, n, partial):
    """``E f`` per ``j`` for polynomial pieces, given ``partial(js, n, m, b) = E[S**m; S < b]``."""
    js = np.asarray(js, dtype=float)
    out = np.zeros(js.size)
    for lo, hi, coeffs in pieces:
        for m, c in enumerate(coeffs):
            if c == 0.0:
                continue
            out += c * (partial(js, n, m, hi) - partial(js, n, m, lo))
    return out


def _kernel_values(f, kind, js, n, q):
    pieces = _pieces(f)
    if kind == "discrete":
        return _vectorized(f)(np.asarray(js, dtype=float) / n)
    if kind == "durrmeyer":
        if pieces is not None:
            return _piecewise_expectations(pieces, js, n, special.beta_prime_partial_moment)
        return special.beta_prime_expectations(_vectorized(f), js, n, q)
    if pieces is not None:
        return _piecewise_expectations(pieces, js, n, special.gamma_partial_moment)
    return special.gamma_expectations(_vectorized(f), js, n, q)


def evaluate(sys, cfg: OperatorConfig, f, x) -> Evaluation:
    """Operator value at ``x`` together with an error budget.

    The budget adds the neglected weight mass (times the largest kernel value
    seen) to the quadrature tolerance applied to ``sum w_j |E_j f|``.
    """
    x = float(x)
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    w, j_lo, j_cut, lost = _active_weights(sys, cfg, x)
    js = np.arange(j_lo, j_cut + 1)
    n = cfg.n
    if cfg.kind == "durrmeyer" and j_lo == 0:
        w0, w, js = w[0], w[1:], js[1:]
        head = w0 * float(_vectorized(f)(np.zeros(1))[0]) if cfg.j0_convention == "point-mass-at-zero" else 0.0
    else:
        head = 0.0
    live = w > 0.0
    w, js = w[live], js[live]
    vals = _kernel_values(f, cfg.kind, js, n, cfg.quad) if js.size else np.zeros(0)
    value = head + math.fsum(w * vals)
    scale = float(np.max(np.abs(vals))) if vals.size else abs(head)
    quad_err = 0.0 if cfg.kind == "discrete" else cfg.quad.rel_tol * math.fsum(w * np.abs(vals))
    return Evaluation(value, lost * scale + quad_err, j_lo, j_cut)


def _expect_kind(cfg, kind):
    if cfg.kind != kind:
        raise ValueError(f"config kind is {cfg.kind!r}, expected {kind!r}")


def apply_discrete(sys, cfg, f, x) -> float:
    _expect_kind(cfg, "discrete")
    return evaluate(sys, cfg, f, x).value


def apply_durrmeyer(sys, cfg, f, x) -> float:
    _expect_kind(cfg, "durrmeyer")
    return evaluate(sys, cfg, f, x).value


def apply_szasz_durrmeyer(sys, cfg, f, x) -> float:
    _expect_kind(cfg, "szasz_durrmeyer")
    return evaluate(sys, cfg, f, x).value


def apply(sys, kind, f, n, x, **config) -> float:
    """Shorthand: build an :class:`OperatorConfig` and evaluate."""
    return evaluate(sys, OperatorConfig(kind=kind, n=n, **config), f, x).value


# -- kernel CDF -----------------------------------------------------------------------


@dataclass(frozen=True)
class KernelCDF:
    """``y -> integral_0^y`` of the Durrmeyer kernel at fixed ``(n, x)``."""

    n: int
    x: float
    point_mass: float
    weights: np.ndarray
    js: np.ndarray

    def __call__(self, y):
        y = float(y)
        if y < 0:
            raise ValueError("y must be nonnegative")
        t = 1.0 if math.isinf(y) else y / (1.0 + y)
        return self.point_mass + math.fsum(self.weights * sp.betainc(self.js, self.n + 1, t))

    cdf = __call__


def kernel_cdf_function(sys, cfg, x) -> KernelCDF:
    _expect_kind(cfg, "durrmeyer")
    w, j_lo, j_cut, _ = _active_weights(sys, cfg, float(x))
    js = np.arange(j_lo, j_cut + 1, dtype=float)
    w0 = 0.0
    if j_lo == 0:
        w0, w, js = float(w[0]), w[1:], js[1:]
        if cfg.j0_convention == "drop":
            w0 = 0.0
    return KernelCDF(cfg.n, float(x), w0, w, js)


def kernel_cdf(sys, cfg, x, y) -> float:
    return kernel_cdf_function(sys, cfg, x)(y)
