"""Log-beta, Beta-prime and Gamma kernel expectations.

Beta-prime(j, n+1) expectations are computed on the mapped variable
``t = s / (1 + s)``, which turns the kernel into a Beta(j, n+1) density on
``[0, 1)``.  Gauss rules for Beta and Gamma distributions are built by the
Golub-Welsch method directly as probability measures (weights sum to one), so
the huge normalizing constants of the classical Jacobi/Laguerre weights never
appear.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.linalg import eigh_tridiagonal

from .errors import DivergentMomentError, PoleError, QuadratureFailureError

__all__ = [
    "QuadratureSpec",
    "log_beta",
    "beta_rule",
    "gamma_rule",
    "beta_prime_expectation",
    "beta_prime_expectations",
    "beta_prime_moment_closed",
    "beta_prime_partial_moment",
    "gamma_expectation",
    "gamma_expectations",
    "gamma_moment_closed",
    "gamma_partial_moment",
]

SCHEMES = ("gauss-jacobi-mapped", "adaptive")

# (1 - t)**k is moved from the weight into the integrand so that f(s) = s**m,
# m <= k, becomes a polynomial in t and is integrated exactly.
REGULARIZING_POWER = 4


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "gauss-jacobi-mapped"
    nodes: int = 32
    rel_tol: float = 1e-9
    domain_cap: float = 1e6

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.nodes < 8:
            raise ValueError(f"need at least 8 nodes, got {self.nodes}")
        if not 0.0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.domain_cap <= 0:
            raise ValueError("domain_cap must be positive")


DEFAULT_QUAD = QuadratureSpec()


def log_beta(j, m):
    """``ln B(j, m)``; raises :class:`PoleError` when an argument is not positive."""
    if j <= 0 or m <= 0:
        raise PoleError(f"B({j}, {m}) is undefined: Gamma has a pole at nonpositive integers")
    return float(special.betaln(j, m))


# -- Gauss rules for probability measures ------------------------------------------


@lru_cache(maxsize=65536)
def beta_rule(nodes, a, b):
    """Gauss rule for the Beta(a, b) distribution on [0, 1].

    Returns ``(t, 1 - t, w)``; ``1 - t`` is formed from the Jacobi eigenvalue to
    keep relative accuracy near ``t = 1``.
    """
    alpha, beta = float(b) - 1.0, float(a) - 1.0
    k = np.arange(nodes, dtype=float)
    s = 2.0 * k + alpha + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (beta * beta - alpha * alpha) / (s * (s + 2.0))
    if not np.isfinite(diag[0]):
        diag[0] = (beta - alpha) / (alpha + beta + 2.0)
    k1 = k[1:]
    s1 = s[1:]
    off = np.sqrt(4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + alpha + beta)
                  / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0)))
    u, vec = eigh_tridiagonal(diag, off)
    w = vec[0] ** 2
    w /= w.sum()
    t = 0.5 * (1.0 + u)
    omt = 0.5 * (1.0 - u)
    for arr in (t, omt, w):
        arr.setflags(write=False)
    return t, omt, w


@lru_cache(maxsize=65536)
def gamma_rule(nodes, shape):
    """Gauss rule for the Gamma(shape, rate 1) distribution on [0, inf)."""
    alpha = float(shape) - 1.0
    k = np.arange(nodes, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    k1 = k[1:]
    off = np.sqrt(k1 * (k1 + alpha))
    u, vec = eigh_tridiagonal(diag, off)
    w = vec[0] ** 2
    w /= w.sum()
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


# -- Beta-prime kernel ------------------------------------------------------------


def _check_j(j):
    if np.any(np.asarray(j) < 1):
        raise PoleError(f"Beta-prime kernel needs j >= 1 (B(0, n+1) has a pole), got j={j}")


def _gauss_beta_prime(f, js, n, nodes):
    """Gauss values of E[f] and E[|f|] for each j in ``js``."""
    k = min(REGULARIZING_POWER, n)
    ts, omts, ws = zip(*(beta_rule(nodes, int(j), n + 1 - k) for j in js))
    t = np.array(ts)
    omt = np.array(omts)
    w = np.array(ws)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        s = t / omt
        vals = np.asarray(f(s), dtype=float) * omt ** k
    vals = np.where(omt > 0.0, vals, 0.0)
    js = np.asarray(js, dtype=float)
    scale = np.exp(special.betaln(js, n + 1 - k) - special.betaln(js, n + 1)) if k else 1.0
    est = np.sum(w * vals, axis=1) * scale
    mag = np.sum(w * np.abs(vals), axis=1) * scale
    return est, mag


def _adaptive_beta_prime(f, j, n, q):
    lb = special.betaln(j, n + 1)
    t_cap = q.domain_cap / (1.0 + q.domain_cap)

    def integrand(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        dens = math.exp((j - 1) * math.log(t) + n * math.log1p(-t) - lb)
        return dens * float(f(t / (1.0 - t)))

    mean = j / (j + n + 1.0)
    sd = math.sqrt(j * (n + 1.0) / ((j + n + 1.0) ** 2 * (j + n + 2.0)))
    points = sorted({min(max(mean + c * sd, 1e-12), t_cap * (1 - 1e-12)) for c in (-6, -2, 0, 2, 6)})
    return _quad(integrand, 0.0, t_cap, points, q, f"Beta-prime({j}, {n + 1})")


def _quad(integrand, lo, hi, points, q, label):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, lo, hi, points=points, epsabs=0.0,
                                      epsrel=q.rel_tol, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailureError(f"adaptive quadrature for {label} did not converge: {exc}") from exc
    return val


def beta_prime_expectations(f, js, n, q=DEFAULT_QUAD):
    """Vector of ``E[f(S)]``, ``S ~ Beta-prime(j, n+1)``, for each ``j`` in ``js``.

    The Gauss estimate is refined once (doubling the node count); any ``j``
    whose two estimates differ by more than ``rel_tol`` falls back to adaptive
    quadrature.
    """
    js = [int(j) for j in js]
    for j in js:
        _check_j(j)
    if not js:
        return np.zeros(0)
    if q.scheme == "adaptive":
        return np.array([_adaptive_beta_prime(f, j, n, q) for j in js])
    coarse, _ = _gauss_beta_prime(f, js, n, q.nodes)
    fine, mag = _gauss_beta_prime(f, js, n, 2 * q.nodes)
    bad = np.abs(fine - coarse) > q.rel_tol * np.maximum(mag, 1e-300)
    for i in np.flatnonzero(bad):
        fine[i] = _adaptive_beta_prime(f, js[i], n, q)
    return fine


def beta_prime_expectation(f, j, n, q=DEFAULT_QUAD):
    """``(1/B(j, n+1)) * integral_0^inf s**(j-1) (1+s)**-(n+j+1) f(s) ds``."""
    return float(beta_prime_expectations(f, [j], n, q)[0])


def beta_prime_moment_closed(j, n, m):
    """``Gamma(j+m) Gamma(n+1-m) / (Gamma(j) Gamma(n+1))``, the m-th Beta-prime moment.

    Integer ``m`` uses the exact finite product; real ``m`` goes through log-gamma.
    """
    _check_j(j)
    if m >= n + 1:
        raise DivergentMomentError(f"moment of order {m} diverges for Beta-prime({j}, {n + 1})")
    if float(m).is_integer() and m >= 0:
        out = 1.0
        for i in range(int(m)):
            out *= (j + i) / (n - i)
        return out
    return math.exp(math.lgamma(j + m) + math.lgamma(n + 1 - m) - math.lgamma(j) - math.lgamma(n + 1))


def beta_prime_partial_moment(j, n, m, b):
    """``E[S**m ; S < b]`` for ``S ~ Beta-prime(j, n+1)``, integer ``0 <= m < n+1``.

    ``j`` may be an array; the result then has the same shape.
    """
    _check_j(j)
    if m >= n + 1:
        raise DivergentMomentError(f"moment of order {m} diverges for Beta-prime(j, {n + 1})")
    j = np.asarray(j, dtype=float)
    full = _rising_ratio(j, n, m)
    if b <= 0:
        return np.zeros_like(full)[()]
    if math.isinf(b):
        return full[()]
    return (full * special.betainc(j + m, n + 1 - m, b / (1.0 + b)))[()]


def _rising_ratio(j, n, m):
    out = np.ones_like(j)
    for i in range(int(m)):
        out = out * (j + i) / (n - i)
    return out


# -- Gamma kernel -------------------------------------------------------------------


def _gauss_gamma(f, js, n, nodes):
    us, ws = zip(*(gamma_rule(nodes, int(j) + 1) for j in js))
    u = np.array(us)
    w = np.array(ws)
    vals = np.asarray(f(u / n), dtype=float)
    return np.sum(w * vals, axis=1), np.sum(w * np.abs(vals), axis=1)


def _adaptive_gamma(f, j, n, q):
    lg = math.lgamma(j + 1)

    def integrand(s):
        if s <= 0.0:
            return float(f(0.0)) * n if j == 0 else 0.0
        dens = n * math.exp(j * math.log(n * s) - n * s - lg)
        return dens * float(f(s))

    mean = (j + 1.0) / n
    sd = math.sqrt(j + 1.0) / n
    # Past this point the Gamma tail holds < 1e-30 of the mass; a domain far
    # beyond it hides the bulk from quad's bisection.
    hi = min(q.domain_cap, float(special.gammainccinv(j + 1, 1e-30)) / n)
    points = sorted({max(mean + c * sd, 1e-12) for c in (-6, -2, 0, 2, 6)})
    return _quad(integrand, 0.0, hi, [p for p in points if p < hi], q, f"Gamma({j + 1}, rate {n})")


def gamma_expectations(f, js, n, q=DEFAULT_QUAD):
    """Vector of ``E[f(S)]``, ``S ~ Gamma(shape j+1, rate n)``, for each ``j`` in ``js``."""
    js = [int(j) for j in js]
    if any(j < 0 for j in js):
        raise ValueError("Gamma kernel needs j >= 0")
    if not js:
        return np.zeros(0)
    if q.scheme == "adaptive":
        return np.array([_adaptive_gamma(f, j, n, q) for j in js])
    coarse, _ = _gauss_gamma(f, js, n, q.nodes)
    fine, mag = _gauss_gamma(f, js, n, 2 * q.nodes)
    bad = np.abs(fine - coarse) > q.rel_tol * np.maximum(mag, 1e-300)
    for i in np.flatnonzero(bad):
        fine[i] = _adaptive_gamma(f, js[i], n, q)
    return fine


def gamma_expectation(f, j, n, q=DEFAULT_QUAD):
    """``n * integral_0^inf exp(-n s) (n s)**j / j! * f(s) ds``."""
    return float(gamma_expectations(f, [j], n, q)[0])


def gamma_moment_closed(j, n, m):
    """Rising factorial ``(j+1)(j+2)...(j+m) / n**m``."""
    out = 1.0
    for i in range(1, int(m) + 1):
        out *= (j + i) / n
    return out


def gamma_partial_moment(j, n, m, b):
    """``E[S**m ; S < b]`` for ``S ~ Gamma(j+1, rate n)``; ``j`` may be an array."""
    j = np.asarray(j, dtype=float)
    full = np.ones_like(j)
    for i in range(1, int(m) + 1):
        full = full * (j + i) / n
    if b <= 0:
        return np.zeros_like(full)[()]
    if math.isinf(b):
        return full[()]
    return (full * special.gammainc(j + 1 + m, n * b))[()]
