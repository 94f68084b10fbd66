"""Moduli of smoothness, weighted norms, Lipschitz fits and total variation.

Every supremum is taken over a finite grid and returned together with a grid
resolution, the largest change of the objective between neighbouring grid
points, so that callers can set honest tolerances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "GridValue",
    "GridFunction",
    "PiecewiseFunction",
    "phi",
    "modulus_classical",
    "modulus_ditzian_totik",
    "weighted_modulus",
    "weighted_norm",
    "lipschitz_fit",
    "total_variation",
]

STEPS_PER_DELTA = 16
DT_I_STEPS = 64
DT_X_POINTS = 2048
X_MAX = 50.0
WEIGHTED_STEP = 1.0 / 64


class GridValue(NamedTuple):
    value: float
    resolution: float


def _evaluate(f, s):
    s = np.asarray(s, dtype=float)
    out = np.asarray(f(s), dtype=float)
    if out.shape != s.shape:
        out = np.vectorize(lambda v: float(f(float(v))), otypes=[float])(s)
    return out


def phi(x):
    """``sqrt(x (1 + x))``, the step-size weight of the Ditzian-Totik modulus."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(x * (1.0 + x))


# -- function descriptors -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of ``f`` on a strictly increasing grid, with growth data ``|f| <= M (1 + s**sigma)``."""

    points: np.ndarray
    values: np.ndarray
    sigma: float = 2.0
    M: float | None = None

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        v = np.array(self.values, dtype=float)
        if p.ndim != 1 or p.shape != v.shape or p.size == 0:
            raise ValueError("points and values must be 1-d arrays of equal, nonzero length")
        if np.any(np.diff(p) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f, points, **kw):
        points = np.asarray(points, dtype=float)
        return cls(points, _evaluate(f, points), **kw)

    def __call__(self, s):
        return np.interp(s, self.points, self.values)


@dataclass(frozen=True, eq=False)
class PiecewiseFunction:
    """Continuous function given by polynomial pieces ``sum_m c_m s**m`` on ``[lo, hi)``.

    Coefficients are in powers of ``s`` itself, not of ``s - lo``.
    """

    pieces: tuple
    tol: float = 1e-12

    def __post_init__(self):
        pieces = tuple((float(lo), float(hi), tuple(float(c) for c in coeffs))
                       for lo, hi, coeffs in self.pieces)
        if not pieces:
            raise ValueError("need at least one piece")
        for (lo, hi, c) in pieces:
            if not lo < hi:
                raise ValueError(f"empty piece [{lo}, {hi})")
            if not c:
                raise ValueError("every piece needs coefficients")
        for (_, hi, c), (lo, _, d) in zip(pieces, pieces[1:]):
            if hi != lo:
                raise ValueError(f"pieces must be contiguous, gap at {hi} / {lo}")
            left = _polyval(c, hi)
            right = _polyval(d, lo)
            if abs(left - right) > self.tol * (1.0 + abs(left)):
                raise ValueError(f"discontinuity at {hi}: {left} != {right}")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_descriptor(cls, items):
        """Build from ``[{"lo":…, "hi":…, "kind": "poly", "coeffs": […]}, …]`` (JSON text or list)."""
        if isinstance(items, str):
            items = json.loads(items)
        pieces = []
        for item in items:
            if item.get("kind", "poly") != "poly":
                raise ValueError(f"unsupported piece kind {item.get('kind')!r}")
            hi = item["hi"]
            hi = math.inf if hi is None or hi in ("inf", "Infinity") else float(hi)
            pieces.append((float(item["lo"]), hi, item["coeffs"]))
        return cls(tuple(pieces))

    def to_descriptor(self):
        return [{"lo": lo, "hi": (None if math.isinf(hi) else hi), "kind": "poly", "coeffs": list(c)}
                for lo, hi, c in self.pieces]

    @property
    def lo(self):
        return self.pieces[0][0]

    @property
    def hi(self):
        return self.pieces[-1][1]

    @property
    def breakpoints(self):
        return tuple(p[0] for p in self.pieces[1:])

    def _piece_index(self, s):
        edges = np.array([p[0] for p in self.pieces[1:]])
        return np.searchsorted(edges, s, side="right")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = self._piece_index(s)
        out = np.empty_like(s)
        for k, (_, _, c) in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = np.polynomial.polynomial.polyval(s[mask], c)
        return out[()] if out.ndim == 0 else out

    def derivative(self, s, order=1):
        """Piecewise derivative; at a breakpoint the right-hand piece is used."""
        s = np.asarray(s, dtype=float)
        idx = self._piece_index(s)
        out = np.empty_like(s)
        for k, (_, _, c) in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = np.polynomial.polynomial.polyval(
                    s[mask], np.polynomial.polynomial.polyder(c, order))
        return out[()] if out.ndim == 0 else out

    def derivative_limits(self, t):
        """``(f'(t-), f'(t+))``."""
        left = right = None
        for lo, hi, c in self.pieces:
            dc = np.polynomial.polynomial.polyder(c)
            if lo < t <= hi:
                left = float(np.polynomial.polynomial.polyval(t, dc))
            if lo <= t < hi:
                right = float(np.polynomial.polynomial.polyval(t, dc))
        if left is None:
            left = right
        if right is None:
            right = left
        return left, right


def _polyval(c, t):
    return float(np.polynomial.polynomial.polyval(t, c))


# -- moduli -------------------------------------------------------------------------


def _uniform(a, b, step):
    m = max(int(math.ceil((b - a) / step - 1e-9)), 1)
    return np.linspace(a, b, m + 1)


def _neighbor_change(values):
    return float(np.max(np.abs(np.diff(values)))) if values.size > 1 else 0.0


def modulus_classical(f, delta, domain=(0.0, X_MAX)) -> GridValue:
    """``sup |f(x) - f(y)|`` over grid pairs with ``|x - y| <= delta``; step ``<= delta/16``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    a, b = map(float, domain)
    grid = _uniform(a, b, delta / STEPS_PER_DELTA)
    h = (b - a) / (grid.size - 1)
    vals = _evaluate(f, grid)
    kmax = min(int(math.floor(delta / h * (1 + 1e-12))), grid.size - 1)
    best = 0.0
    for k in range(1, kmax + 1):
        best = max(best, float(np.max(np.abs(vals[k:] - vals[:-k]))))
    return GridValue(best, _neighbor_change(vals))


def _mixed_grid(a, b, size):
    half = size // 2
    span = b - a
    geo = a + np.geomspace(span * 1e-8, span, half)
    uni = np.linspace(a, b, size - half)
    return np.unique(np.concatenate([geo, uni]))


def modulus_ditzian_totik(f, delta, gamma, domain=(0.0, X_MAX)) -> GridValue:
    """``sup_{0 < i <= delta} sup_x |f(x + i phi(x)**gamma / 2) - f(x - i phi(x)**gamma / 2)|``.

    ``x`` ranges over a mixed geometric/uniform grid plus, for every step
    ``i``, the two points where the pair touches the ends of ``domain``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    a, b = map(float, domain)
    steps = delta * np.arange(1, DT_I_STEPS + 1) / DT_I_STEPS
    xs = _mixed_grid(a, b, DT_X_POINTS)
    half = 0.5 * steps[:, None] * phi(xs)[None, :] ** gamma
    lo, hi = xs[None, :] - half, xs[None, :] + half
    ok = (lo >= a) & (hi <= b)
    diff = np.abs(_evaluate(f, np.where(ok, hi, xs)) - _evaluate(f, np.where(ok, lo, xs)))
    obj = np.where(ok, diff, np.nan)
    best = float(np.nanmax(obj)) if np.any(ok) else 0.0
    for i in steps:
        for x in _touching_points(i, gamma, a, b):
            hw = 0.5 * i * float(phi(x)) ** gamma
            if x - hw >= a - 1e-12 and x + hw <= b + 1e-12:
                pair = _evaluate(f, np.array([max(x - hw, a), min(x + hw, b)]))
                best = max(best, abs(float(pair[1] - pair[0])))
    res = 0.0
    for axis in (0, 1):
        d = np.abs(np.diff(obj, axis=axis))
        if np.any(np.isfinite(d)):
            res = max(res, float(np.nanmax(d)))
    return GridValue(best, res)


def _touching_points(i, gamma, a, b):
    """Centres whose pair reaches ``a`` from above or ``b`` from below."""
    out = []
    for end, sign in ((a, -1.0), (b, 1.0)):
        g = lambda x: x + sign * 0.5 * i * float(phi(x)) ** gamma - end
        ga, gb = g(a), g(b)
        if ga == 0.0:
            out.append(a)
        elif gb == 0.0:
            out.append(b)
        elif ga * gb < 0:
            out.append(brentq(g, a, b, xtol=1e-14, rtol=1e-14))
    return out


def weighted_modulus(f, delta, X_max=X_MAX, absolute=False) -> GridValue:
    """``sup_{x <= X_max, 0 < h <= delta} (f(x+h) - f(x)) / (1 + (x+h)**2)``.

    The numerator is signed; ``absolute=True`` takes ``|f(x+h) - f(x)|``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    # One shared step for all delta >= 16 * WEIGHTED_STEP keeps the value monotone in delta.
    h = min(delta / STEPS_PER_DELTA, WEIGHTED_STEP)
    grid = _uniform(0.0, X_max, h)
    h = X_max / (grid.size - 1)
    k_max = int(math.floor(delta / h * (1 + 1e-12)))
    ext = np.concatenate([grid, grid[-1] + h * np.arange(1, k_max + 1)])
    vals = _evaluate(f, ext)
    weight = 1.0 / (1.0 + ext ** 2)
    m = grid.size
    best = -math.inf
    for k in range(1, k_max + 1):
        num = vals[k:k + m] - vals[:m]
        if absolute:
            num = np.abs(num)
        best = max(best, float(np.max(num * weight[k:k + m])))
    res = _neighbor_change(vals * weight)
    return GridValue(max(best, 0.0) if absolute else best, res)


def weighted_norm(f, X_max=X_MAX, sigma=None, M=None) -> GridValue:
    """``sup |f(x)| / (1 + x**2)`` over a grid on ``[0, X_max]``.

    A :class:`GridFunction` is read on its own points.  With ``sigma < 2`` and
    a growth constant ``M`` the analytic tail bound ``M (1 + X**sigma) / (1 + X**2)``
    for ``x > X_max`` is folded in.
    """
    if isinstance(f, GridFunction):
        xs, vals = f.points, f.values
        sigma = f.sigma if sigma is None else sigma
        M = f.M if M is None else M
        X_max = float(xs[-1])
    else:
        xs = np.linspace(0.0, X_max, 50001)
        vals = _evaluate(f, xs)
    obj = np.abs(vals) / (1.0 + xs ** 2)
    best = float(np.max(obj))
    if sigma is not None and M is not None and sigma < 2:
        best = max(best, M * (1.0 + X_max ** sigma) / (1.0 + X_max ** 2))
    return GridValue(best, _neighbor_change(obj))


def lipschitz_fit(f, r, domain=(0.0, X_MAX), size=1200) -> GridValue:
    """Smallest ``K`` with ``|f(s) - f(x)| <= K |s - x|**r / (s + x)**(r/2)`` on grid pairs.

    The grid contains the left end of ``domain`` (so ``s = 0`` pairs are
    tested); pairs with ``s + x = 0`` are skipped.  The resolution is the
    change of the fit when every other grid point is dropped.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    a, b = map(float, domain)
    grid = _mixed_grid(a, b, size)
    if grid[0] != a:
        grid = np.concatenate([[a], grid])
    vals = _evaluate(f, grid)
    full = _lipschitz_max(grid, vals, r)
    coarse = _lipschitz_max(grid[::2], vals[::2], r)
    return GridValue(full, abs(full - coarse))


def _lipschitz_max(grid, vals, r):
    best = 0.0
    for i in range(grid.size - 1):
        s, fs = grid[i + 1:], vals[i + 1:]
        x, fx = grid[i], vals[i]
        tot = s + x
        ok = tot > 0
        if not np.any(ok):
            continue
        ratio = np.abs(fs[ok] - fx) * tot[ok] ** (r / 2) / (s[ok] - x) ** r
        best = max(best, float(np.max(ratio)))
    return best


# -- total variation ------------------------------------------------------------------


def total_variation(pf: PiecewiseFunction, a, b, center=None) -> float:
    """Total variation of ``f'`` on ``[a, b]``.

    Inside each piece ``f'`` is a polynomial, split at the real roots of
    ``f''``; jumps of ``f'`` at interior breakpoints are added.  The values at
    the ends of ``[a, b]`` are the inward one-sided limits.

    With ``center = x`` the derivative is replaced by
    ``f'_x(t) = f'(t) - f'(x-)`` for ``t < x``, ``0`` at ``x`` and
    ``f'(t) - f'(x+)`` for ``t > x``; this removes the jump at ``x`` and
    changes nothing else.
    """
    a, b = float(a), float(b)
    if b < a:
        raise ValueError("need a <= b")
    if a < pf.lo or b > pf.hi:
        raise ValueError(f"[{a}, {b}] is outside the descriptor domain [{pf.lo}, {pf.hi})")
    total = 0.0
    for lo, hi, c in pf.pieces:
        u, v = max(lo, a), min(hi, b)
        if u >= v:
            continue
        d1 = np.polynomial.polynomial.polyder(c)
        d2 = np.polynomial.polynomial.polyder(d1)
        cuts = [u, v]
        if d2.size and np.any(d2 != 0):
            for root in np.polynomial.polynomial.polyroots(np.trim_zeros(d2, "b")) if np.trim_zeros(d2, "b").size > 1 else []:
                if abs(root.imag) < 1e-12 and u < root.real < v:
                    cuts.append(root.real)
        cuts = np.sort(np.array(cuts))
        total += float(np.sum(np.abs(np.diff(np.polynomial.polynomial.polyval(cuts, d1)))))
    for t in pf.breakpoints:
        if a < t < b and not (center is not None and t == center):
            left, right = pf.derivative_limits(t)
            total += abs(right - left)
    return total
