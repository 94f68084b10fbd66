"""Built-in test functions for experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..smoothness import PiecewiseFunction


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    f: Callable
    description: str
    bounded: bool = False


def _one(s):
    return np.ones_like(np.asarray(s, dtype=float))


def _identity(s):
    return np.asarray(s, dtype=float)


def _square(s):
    return np.asarray(s, dtype=float) ** 2


ABS_S_MINUS_1 = PiecewiseFunction(((0.0, 1.0, (1.0, -1.0)), (1.0, math.inf, (-1.0, 1.0))))
KINKED = PiecewiseFunction(((0.0, 1.0, (0.0, 0.0, 1.0)), (1.0, math.inf, (2.0, -1.0))))

CATALOG = {
    e.id: e
    for e in (
        CatalogEntry("one", _one, "f(s) = 1", bounded=True),
        CatalogEntry("s", _identity, "f(s) = s"),
        CatalogEntry("s2", _square, "f(s) = s^2"),
        CatalogEntry("sqrt", np.sqrt, "f(s) = sqrt(s)"),
        CatalogEntry("exp_neg", lambda s: np.exp(-np.asarray(s, dtype=float)), "f(s) = exp(-s)", bounded=True),
        CatalogEntry("abs_s_minus_1", ABS_S_MINUS_1, "f(s) = |s - 1|"),
        CatalogEntry("piecewise", KINKED, "f(s) = s^2 on [0, 1), 2 - s on [1, inf)"),
    )
}


def get_function(fid) -> CatalogEntry:
    try:
        return CATALOG[fid]
    except KeyError:
        raise KeyError(f"unknown test function {fid!r}; known: {sorted(CATALOG)}") from None
