"""Closed-form moments, central moments and their large-n limits.

Every formula is expressed through

* ``r1 = xi'(p)/xi(p)`` and ``r2 = xi''(p)/xi(p)`` at ``p = p(x)``,
* ``S'(1)/S(1)``, ``S''(1)/S(1)``, ``U''(1)``, ``V'(1)``, ``V''(1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bbsystem import p_of_x
from .errors import DegenerateNormalizerError, LimitEstimateError
from .operators import OperatorConfig, evaluate

__all__ = [
    "Coefficients",
    "coefficients",
    "discrete_moments",
    "durrmeyer_moments",
    "central_moments",
    "central_moments_from_raw",
    "MomentReport",
    "moment_report",
    "LimitEstimates",
    "limit_estimates",
    "richardson",
    "global_bound",
]


class Coefficients(NamedTuple):
    r1: float
    r2: float
    s1: float  # S'(1)/S(1)
    s2: float  # S''(1)/S(1)
    u2: float
    v1: float
    v2: float


def coefficients(sys, n, x) -> Coefficients:
    p = p_of_x(sys, n, x)
    s0, sd1, sd2 = sys.s_at_one
    if s0 == 0.0:
        raise DegenerateNormalizerError("S(1) = 0")
    if sys.xi_kind != "exp" and sys.xi_eval(p) == 0.0:
        raise DegenerateNormalizerError(f"xi(p(x)) = 0 at p = {p}")
    return Coefficients(
        r1=sys.xi_ratio(p, 1),
        r2=sys.xi_ratio(p, 2),
        s1=sd1 / s0,
        s2=sd2 / s0,
        u2=sys.u_at_one[2],
        v1=sys.v_at_one[1],
        v2=sys.v_at_one[2],
    )


def discrete_moments(sys, n, x):
    """``(B_n 1, B_n s, B_n s^2)`` at ``x``."""
    c = coefficients(sys, n, x)
    m1 = c.r1 * x + (c.s1 + c.v1 * c.r1) / n
    m2 = (
        c.r2 * x * x
        + (c.r1 * (2.0 * c.s1 + c.u2 + 1.0) + 2.0 * c.v1 * c.r2) * x / n
        + (c.s2 + c.s1 + (2.0 * c.s1 * c.v1 + c.v2 + c.v1) * c.r1 + c.v1 ** 2 * c.r2) / n ** 2
    )
    return 1.0, m1, m2


def durrmeyer_moments(sys, n, x, verbatim=False):
    """``(B~_n 1, B~_n s, B~_n s^2)`` at ``x``.

    The constant term of the second moment carries ``V'(1)**2``, which is what
    ``B~_n s^2 = (n B_n s^2 + B_n s) / (n - 1)`` produces.  ``verbatim=True``
    uses ``V''(1)**2`` there instead, as the formula is sometimes printed; the
    two differ only when ``V`` is nonzero.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    c = coefficients(sys, n, x)
    m1 = c.r1 * x + (c.s1 + c.v1 * c.r1) / n
    vsq = c.v2 ** 2 if verbatim else c.v1 ** 2
    m2 = (
        n / (n - 1.0) * c.r2 * x * x
        + x / (n - 1.0) * (2.0 * c.v1 * c.r2 + (2.0 + 2.0 * c.s1 + c.u2) * c.r1)
        + (vsq * c.r2 + (2.0 * c.s1 * c.v1 + 2.0 * c.v1 + c.v2) * c.r1 + 2.0 * c.s1 + c.s2) / (n * (n - 1.0))
    )
    return 1.0, m1, m2


def central_moments(sys, n, x):
    """``(mu1, mu2)``: first and second central moments of ``B~_n`` at ``x``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    c = coefficients(sys, n, x)
    mu1 = (c.r1 - 1.0) * x + (c.s1 + c.v1 * c.r1) / n
    mu2 = (
        (n / (n - 1.0) * c.r2 - 2.0 * c.r1 + 1.0) * x * x
        + (
            2.0 / (n - 1.0) * c.v1 * c.r2
            + (2.0 + c.u2 + 2.0 * c.s1) * c.r1 / (n - 1.0)
            - 2.0 / n * (c.v1 * c.r1 + c.s1)
        ) * x
        + (c.v1 ** 2 * c.r2 + (2.0 * c.v1 * c.s1 + 2.0 * c.v1 + c.v2) * c.r1 + (2.0 * c.s1 + c.s2)) / (n * (n - 1.0))
    )
    return mu1, mu2


def central_moments_from_raw(sys, n, x):
    """``(m1 - x, m2 - 2 x m1 + x^2)`` from :func:`durrmeyer_moments`."""
    _, m1, m2 = durrmeyer_moments(sys, n, x)
    return m1 - x, m2 - 2.0 * x * m1 + x * x


# -- cross-validation report ------------------------------------------------------


def _power(k):
    if k == 0:
        return lambda s: np.ones_like(s)
    return lambda s: s ** k


@dataclass(frozen=True)
class MomentReport:
    n: int
    x: float
    discrete: tuple
    durrmeyer: tuple
    central: tuple
    discrete_quad: tuple
    durrmeyer_quad: tuple

    @property
    def discrete_discrepancy(self):
        return tuple(abs(a - b) for a, b in zip(self.discrete, self.discrete_quad))

    @property
    def durrmeyer_discrepancy(self):
        return tuple(abs(a - b) for a, b in zip(self.durrmeyer, self.durrmeyer_quad))

    def rows(self):
        names = ("m0", "m1", "m2")
        out = []
        for label, closed, numeric in (("discrete", self.discrete, self.discrete_quad),
                                       ("durrmeyer", self.durrmeyer, self.durrmeyer_quad)):
            for name, a, b in zip(names, closed, numeric):
                out.append((label, name, a, b, abs(a - b)))
        for name, v in zip(("mu1", "mu2"), self.central):
            out.append(("central", name, v, float("nan"), float("nan")))
        return out


def moment_report(sys, n, x, **config) -> MomentReport:
    """Closed forms next to their summation/quadrature counterparts."""
    numeric = {}
    for kind in ("discrete", "durrmeyer"):
        cfg = OperatorConfig(kind=kind, n=n, **config)
        numeric[kind] = tuple(evaluate(sys, cfg, _power(k), x).value for k in range(3))
    return MomentReport(
        n=n,
        x=float(x),
        discrete=discrete_moments(sys, n, x),
        durrmeyer=durrmeyer_moments(sys, n, x),
        central=central_moments(sys, n, x),
        discrete_quad=numeric["discrete"],
        durrmeyer_quad=numeric["durrmeyer"],
    )


# -- large-n limits ------------------------------------------------------------------


def richardson(ns, values):
    """Limit of ``values`` under the model ``a + b/n``, from the two largest ``n``.

    Raises :class:`LimitEstimateError` when the successive two-point
    extrapolants stop contracting.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.size < 2 or ns.size != values.size:
        raise LimitEstimateError("need at least two (n, value) pairs")
    if not np.all(np.isfinite(values)):
        raise LimitEstimateError("non-finite value in the sequence")
    order = np.argsort(ns)
    ns, values = ns[order], values[order]
    ext = (ns[1:] * values[1:] - ns[:-1] * values[:-1]) / (ns[1:] - ns[:-1])
    if ext.size >= 3:
        steps = np.abs(np.diff(ext))
        floor = 1e-9 * (1.0 + float(np.max(np.abs(ext))))
        if steps[-1] > floor and steps[-1] > steps[-2]:
            raise LimitEstimateError(
                f"extrapolants diverge: last changes {steps[-2]:.3e} -> {steps[-1]:.3e}"
            )
    return float(ext[-1])


@dataclass(frozen=True)
class LimitEstimates:
    x: tuple
    ell1: tuple
    ell2: tuple
    x_coeff: tuple  # limit of n * (x-coefficient of mu2); expected 2 + U''(1)
    eta1: tuple
    M_bound: float

    def as_rows(self):
        return list(zip(self.x, self.ell1, self.ell2, self.x_coeff, self.eta1))


def _mu2_coefficients(sys, n, x):
    c = coefficients(sys, n, x)
    a = n / (n - 1.0) * c.r2 - 2.0 * c.r1 + 1.0
    b = (2.0 / (n - 1.0) * c.v1 * c.r2 + (2.0 + c.u2 + 2.0 * c.s1) * c.r1 / (n - 1.0)
         - 2.0 / n * (c.v1 * c.r1 + c.s1))
    return c, a, b


def global_bound(sys, xs, n_grid):
    """``max n mu2(n, x) / (x (x + 1))`` over the grid, ``x > 0`` only."""
    best = 0.0
    for x in xs:
        if x <= 0:
            continue
        for n in n_grid:
            best = max(best, n * central_moments(sys, n, x)[1] / (x * (x + 1.0)))
    return best


def limit_estimates(sys, x, n_grid=(10, 20, 40, 80, 160, 320, 640)) -> LimitEstimates:
    """Extrapolated ``ell1``, ``ell2``, ``eta1`` at each ``x`` and the constant ``M``.

    ``ell2`` is the limit of ``n`` times the ``x**2`` coefficient of ``mu2``,
    that is of ``n [n/(n-1) r2 - 2 r1 + 1]``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ns = sorted(int(n) for n in n_grid)
    if ns[0] < 2:
        raise ValueError("n_grid entries must be >= 2")
    ell1, ell2, xcoef, eta1 = [], [], [], []
    u2 = sys.u_at_one[2]
    for xv in xs:
        seq1, seq2, seqb = [], [], []
        for n in ns:
            c, a, b = _mu2_coefficients(sys, n, xv)
            seq1.append(n * (c.r1 - 1.0))
            seq2.append(n * a)
            seqb.append(n * b)
        l1 = richardson(ns, seq1)
        l2 = richardson(ns, seq2)
        ell1.append(l1)
        ell2.append(l2)
        xcoef.append(richardson(ns, seqb))
        eta1.append(float(l2 * xv * xv + (2.0 + u2) * xv))
    return LimitEstimates(
        x=tuple(float(v) for v in xs),
        ell1=tuple(ell1),
        ell2=tuple(ell2),
        x_coeff=tuple(xcoef),
        eta1=tuple(eta1),
        M_bound=float(global_bound(sys, xs, ns)),
    )
