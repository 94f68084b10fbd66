"""Truncated formal power series with real coefficients.

A :class:`TruncatedSeries` of order ``J`` stores ``c_0 .. c_J`` densely.  All
products are truncated at ``J``; composition requires an inner series without
constant term so that only the first ``J + 1`` outer coefficients contribute.

Products are evaluated as a fixed sequence of shifted vector additions, so the
coefficient of ``s**i`` is computed from the same operands in the same order no
matter what the truncation order is.  Two compositions at orders ``J < J'``
therefore agree bit-for-bit on their shared indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CompositionDomainError, OrderMismatchError

__all__ = [
    "TruncatedSeries",
    "series_mul",
    "series_compose",
    "series_eval",
    "series_derivatives_at_one",
    "compose_scaled",
    "exp_series",
]

# 2**RESCALE_BITS bounds the dynamic range kept in a scaled mantissa vector.
RESCALE_BITS = 512


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """Power series ``sum_k coeffs[k] s**k`` known up to ``s**order``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True).reshape(-1)
        if c.size == 0:
            raise ValueError("a truncated series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs, order=None, shift=0):
        """Build a dense series from ``sum_j coeffs[j] s**(j + shift)``.

        Coefficients beyond ``order`` are dropped; missing ones are zero.
        """
        raw = np.asarray(coeffs, dtype=float).reshape(-1)
        if order is None:
            order = max(raw.size + shift - 1, 0)
        dense = np.zeros(order + 1)
        if shift <= order and raw.size:
            m = min(raw.size, order + 1 - shift)
            dense[shift:shift + m] = raw[:m]
        return cls(dense)

    @classmethod
    def zero(cls, order):
        return cls(np.zeros(order + 1))

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def valuation(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[0]) if nz.size else self.order + 1

    def truncate(self, order):
        return TruncatedSeries.from_coeffs(self.coeffs, order=order)

    def __add__(self, other):
        _check_orders(self, other)
        return TruncatedSeries(self.coeffs + other.coeffs)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return TruncatedSeries(self.coeffs * float(other))

    __rmul__ = __mul__

    def __call__(self, t):
        return series_eval(self, t)

    def __repr__(self):
        return f"TruncatedSeries(order={self.order}, coeffs={self.coeffs.tolist()!r})"


def _check_orders(a, b):
    if a.order != b.order:
        raise OrderMismatchError(f"series orders differ: {a.order} != {b.order}")


def _mul_trunc(r, b):
    """Cauchy product of dense vectors ``r`` and ``b`` truncated to ``len(r)``."""
    size = r.size
    out = np.zeros(size)
    for d in np.flatnonzero(b[:size]):
        out[d:] += b[d] * r[:size - d]
    return out


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_orders(a, b)
    return TruncatedSeries(_mul_trunc(a.coeffs, b.coeffs))


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """Return ``outer(inner(s))`` truncated to the common order.

    Horner's scheme over the outer coefficients: ``R <- R * inner + c_k``.
    """
    _check_orders(outer, inner)
    if inner.coeffs[0] != 0.0:
        raise CompositionDomainError(
            "inner series has a nonzero constant term; the truncated composition is undefined"
        )
    size = outer.order + 1
    r = np.zeros(size)
    r[0] = outer.coeffs[-1]
    for k in range(outer.order - 1, -1, -1):
        r = _mul_trunc(r, inner.coeffs)
        r[0] += outer.coeffs[k]
    return TruncatedSeries(r)


def series_eval(a: TruncatedSeries, t: float) -> float:
    acc = 0.0
    for c in a.coeffs[::-1]:
        acc = acc * t + c
    return float(acc)


def series_derivatives_at_one(coeffs, shift=0):
    """Value, first and second derivative at ``s = 1`` of ``sum_j c_j s**(j + shift)``.

    ``coeffs`` may be a :class:`TruncatedSeries` (read with ``shift``) or any
    sequence of reals in the shifted representation.
    """
    if shift not in (0, 1, 2, 3):
        raise ValueError(f"shift must be 0, 1, 2 or 3, got {shift}")
    c = coeffs.coeffs if isinstance(coeffs, TruncatedSeries) else np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return 0.0, 0.0, 0.0
    p = np.arange(c.size, dtype=float) + shift
    return math.fsum(c), math.fsum(p * c), math.fsum(p * (p - 1.0) * c)


def exp_series(order) -> TruncatedSeries:
    c = np.empty(order + 1)
    c[0] = 1.0
    for k in range(1, order + 1):
        c[k] = c[k - 1] / k
    return TruncatedSeries(c)


def compose_scaled(outer_mant, outer_exp, inner):
    """Horner composition with power-of-two rescaling.

    The outer coefficients are given as ``outer_mant[k] * 2**outer_exp[k]`` so
    that values far outside the double range (``c**k / k!`` for large ``k``)
    can be represented.  Returns ``(coeffs, e)`` with the composed series equal
    to ``coeffs * 2**e``.  Entries more than ``2**-RESCALE_BITS`` below the
    running maximum may underflow; for nonnegative series they are negligible
    relative to the total mass.
    """
    mant = np.asarray(outer_mant, dtype=float)
    expo = np.asarray(outer_exp, dtype=np.int64)
    inner = np.asarray(inner, dtype=float)
    size = mant.size
    if inner.size < size:
        inner = np.concatenate([inner, np.zeros(size - inner.size)])
    if inner[0] != 0.0:
        raise CompositionDomainError("inner series has a nonzero constant term")
    e = int(expo[-1])
    r = np.zeros(size)
    r[0] = mant[-1]
    for k in range(size - 2, -1, -1):
        r = _mul_trunc(r, inner)
        shift = int(expo[k]) - e
        if shift > RESCALE_BITS:
            r = np.ldexp(r, -shift)
            e += shift
            shift = 0
        r[0] += math.ldexp(float(mant[k]), shift) if shift > -1100 else 0.0
        peak = float(np.max(np.abs(r)))
        if peak > 0.0:
            pe = math.frexp(peak)[1]
            if abs(pe) > RESCALE_BITS // 2:
                r = np.ldexp(r, -pe)
                e += pe
    return r, e
