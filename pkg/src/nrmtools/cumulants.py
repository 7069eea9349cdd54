"""Cumulant/moment conversion and the moment tables normalizing partition laws.

The two sequences are linked by the classical recursion

    m_n = sum_{l=1}^{n} C(n-1, l-1) kappa_l m_{n-l},    m_0 = 1,

which is exact in rational arithmetic; binomial coefficients are therefore
taken as exact integers before any float rounding.  A log-space variant of
the forward direction is provided for the regimes (small u, large n) where
the plain-space values overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NrmError

MAX_ORDER = 64


@dataclass(frozen=True)
class CumulantTable:
    """kappa_1..kappa_N evaluated at a fixed tilt u (values[i] = kappa_{i+1})."""

    u: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or len(self.values) == 0:
            raise DomainError("cumulant table must be a non-empty vector")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise DomainError("cumulants must be finite and positive")

    @property
    def order(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MomentTable:
    """m_1..m_N at a fixed tilt u, with m_0 = 1 implicit."""

    u: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or len(self.values) == 0:
            raise DomainError("moment table must be a non-empty vector")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise DomainError("moments must be finite and positive")

    @property
    def order(self) -> int:
        return len(self.values)


@lru_cache(maxsize=None)
def _binom_row(n: int) -> tuple[float, ...]:
    return tuple(float(math.comb(n, i)) for i in range(n + 1))


def moments_from_cumulants(kt: CumulantTable) -> MomentTable:
    """Moments m_1..m_N from cumulants via the recursion above.

    Raises OverflowError when a moment leaves the float range; the caller
    should evaluate at a larger tilt u (moments decrease in u).
    """
    kappa = kt.values
    n_max = kt.order
    m = np.empty(n_max + 1)
    m[0] = 1.0
    for n in range(1, n_max + 1):
        row = _binom_row(n - 1)
        acc = 0.0
        for l in range(1, n + 1):
            acc += row[l - 1] * kappa[l - 1] * m[n - l]
        if not math.isfinite(acc):
            raise OverflowError(
                f"moment of order {n} overflowed at u={kt.u}; "
                "rescale u or use the log-space table"
            )
        m[n] = acc
    return MomentTable(u=kt.u, values=m[1:])


def cumulants_from_moments(mt: MomentTable) -> CumulantTable:
    """Exact inverse of :func:`moments_from_cumulants`.

    Raises on a non-positive result, which signals a moment table that is not
    realizable by any positive cumulant sequence.
    """
    m = np.concatenate(([1.0], mt.values))
    n_max = mt.order
    kappa = np.empty(n_max)
    for n in range(1, n_max + 1):
        row = _binom_row(n - 1)
        acc = m[n]
        for l in range(1, n):
            acc -= row[l - 1] * kappa[l - 1] * m[n - l]
        if not math.isfinite(acc) or acc <= 0:
            raise DomainError(
                f"inverted cumulant of order {n} is non-positive ({acc}); "
                "inconsistent moment table"
            )
        kappa[n - 1] = acc
    return CumulantTable(u=mt.u, values=kappa)


def log_moments_from_log_cumulants(log_kappa: np.ndarray) -> np.ndarray:
    """Forward recursion in log space (all terms positive, logaddexp-safe)."""
    log_kappa = np.asarray(log_kappa, dtype=float)
    n_max = len(log_kappa)
    log_m = np.empty(n_max + 1)
    log_m[0] = 0.0
    for n in range(1, n_max + 1):
        row = _binom_row(n - 1)
        terms = [
            math.log(row[l - 1]) + log_kappa[l - 1] + log_m[n - l]
            for l in range(1, n + 1)
        ]
        log_m[n] = np.logaddexp.reduce(terms)
    return log_m[1:]


def moment_table(family, n_max: int, u: float) -> MomentTable:
    """m_1..m_N for a prior family at tilt u.

    Families that expose moments directly (the GIG class) are used as-is;
    every other family goes through its cumulants and the recursion.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    if n_max > MAX_ORDER:
        raise DomainError(f"moment order capped at {MAX_ORDER}")
    log_m = family.log_moment_table(n_max, u)
    values = np.exp(log_m)
    if not np.all(np.isfinite(values)):
        raise OverflowError(
            f"moment table overflows at u={u}; consume log_moment_table instead"
        )
    return MomentTable(u=u, values=values)


def cumulant_table(family, n_max: int, u: float) -> CumulantTable:
    """kappa_1..kappa_N for a prior family at tilt u."""
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    log_k = family.log_kappa_table(n_max, u)
    values = np.exp(log_k)
    if not np.all(np.isfinite(values)):
        raise OverflowError(
            f"cumulant table overflows at u={u}; consume log_kappa_table instead"
        )
    return CumulantTable(u=u, values=values)
