"""Partition-level laws: conditional and marginal EPPFs, latent densities,
block counts, occupancy probabilities, and moments of functionals.

Conditional on the latent variable U_n = u, a partition with cell sizes
e_1..e_k has probability

    p(e | u) = prod_j kappa_{e_j}(u) / m_n(u),

a finite Gibbs partition whose normalizer is the n-th tilted moment of the
total mass.  Unconditional laws integrate u out against u^{n-1} e^{-psi(u)}
with adaptive quadrature; every product of cumulants is accumulated in log
space because kappa values span hundreds of orders of magnitude over the
integration range.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .numerics import (
    DEFAULT_QUADRATURE,
    IntegrationResult,
    QuadratureConfig,
    integrate_halfline,
)
from .partitions import (
    OccupancyVector,
    bell_triangle_log,
    enumerate_partitions,
)

FUNCTIONAL_MOMENT_CAP = 10


def _validate_sizes(sizes) -> tuple[int, ...]:
    sizes = tuple(int(e) for e in sizes)
    if not sizes or any(e < 1 for e in sizes):
        raise DomainError(f"cell sizes must be positive integers, got {sizes}")
    return sizes


def log_conditional_eppf(family, sizes: Sequence[int], u: float) -> float:
    """log p(e_1..e_k | U_n = u) for the finite Gibbs law at fixed u."""
    sizes = _validate_sizes(sizes)
    n = sum(sizes)
    log_k = family.log_kappa_table(max(sizes), u)
    log_m = family.log_moment(n, u)
    return float(sum(log_k[e - 1] for e in sizes) - log_m)


def conditional_eppf(family, sizes: Sequence[int], u: float) -> float:
    return math.exp(log_conditional_eppf(family, sizes, u))


def _log_marginal_integrand(family, sizes: tuple[int, ...]) -> Callable[[float], float]:
    n = sum(sizes)
    max_size = max(sizes)

    def log_f(u: float) -> float:
        try:
            log_k = family.log_kappa_table(max_size, u)
        except DomainError:
            return -math.inf
        return (n - 1) * math.log(u) - family.psi(u) + float(
            sum(log_k[e - 1] for e in sizes)
        )

    return log_f


def log_marginal_eppf(family, sizes: Sequence[int],
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """log of the unconditional EPPF: quadrature of
    u^{n-1} prod_j kappa_{e_j}(u) e^{-psi(u)} / Gamma(n) over (0, inf)."""
    sizes = _validate_sizes(sizes)
    n = sum(sizes)
    res = integrate_halfline(_log_marginal_integrand(family, sizes), cfg)
    res.require_converged(f"marginal EPPF for sizes {sizes}")
    return res.log_value - math.lgamma(n)


def marginal_eppf(family, sizes: Sequence[int],
                  cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    return math.exp(log_marginal_eppf(family, sizes, cfg))


def u_log_density_given_partition(family, sizes: Sequence[int]) -> Callable[[float], float]:
    """Unnormalized log posterior density of U_n given the partition:
    u^{n-1} e^{-psi(u)} prod_j kappa_{e_j}(u)."""
    sizes = _validate_sizes(sizes)
    return _log_marginal_integrand(family, sizes)


def u_density_given_partition(family, sizes: Sequence[int], u: float,
                              normalized: bool = False,
                              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Posterior density of U_n | partition at u (unnormalized by default)."""
    if u <= 0:
        raise DomainError("u must be positive")
    log_f = u_log_density_given_partition(family, sizes)
    value = log_f(u)
    if not normalized:
        return math.exp(value)
    res = integrate_halfline(log_f, cfg)
    res.require_converged("posterior normalizer of U_n")
    return math.exp(value - res.log_value)


def u_log_density_marginal(family, n: int, u: float) -> float:
    """log of the proper marginal density of U_n:
    u^{n-1} e^{-psi(u)} m_n(u) / Gamma(n)."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    if u <= 0:
        raise DomainError("u must be positive")
    try:
        log_m = family.log_moment(n, u)
    except DomainError:
        return -math.inf
    return (n - 1) * math.log(u) - family.psi(u) + log_m - math.lgamma(n)


def u_density_marginal(family, n: int, u: float) -> float:
    return math.exp(u_log_density_marginal(family, n, u))


def block_count_distribution(family, n: int, u: float) -> np.ndarray:
    """P(number of blocks = k | U_n = u) for k = 1..n via the identity
    P(k|u) = B_{n,k}(kappa_1(u), kappa_2(u), ...) / m_n(u)."""
    if n < 1 or n > 64:
        raise DomainError("block-count law supports 1 <= n <= 64")
    log_k = family.log_kappa_table(n, u)
    table = bell_triangle_log(n, log_k)
    log_m = family.log_moment(n, u)
    return np.exp(table.values[n, 1 : n + 1] - log_m)


def log_occupancy_distribution(family, counts, u: float) -> float:
    """log P(occupancy vector | U_n = u):
    n!/m_n(u) * prod_j (kappa_j(u)/j!)^{m_j} / m_j!."""
    if isinstance(counts, OccupancyVector):
        occ = counts
    else:
        occ = OccupancyVector(tuple(int(c) for c in counts))
    n = occ.n
    log_k = family.log_kappa_table(n, u)
    log_m = family.log_moment(n, u)
    total = math.lgamma(n + 1) - log_m
    for j, mj in enumerate(occ.counts, start=1):
        if mj:
            total += mj * (log_k[j - 1] - math.lgamma(j + 1)) - math.lgamma(mj + 1)
    return total


def occupancy_distribution(family, counts, u: float) -> float:
    return math.exp(log_occupancy_distribution(family, counts, u))


def functional_moment(family, powers: Sequence[int],
                      h_moment: Callable[[tuple[int, ...]], float],
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[prod_l P(g_l)^{powers[l]}] for a homogeneous family.

    ``h_moment(exponents)`` must return the base-measure integral of
    prod_l g_l^{exponents[l]} under H; closed forms and one-dimensional
    quadratures both qualify.  The moment is assembled as

        sum over partitions p of the n = sum(powers) factor slots of
        (marginal EPPF of p) * prod_cells h_moment(cell exponent profile).
    """
    if not family.is_homogeneous:
        raise DomainError("functional moments require a homogeneous family")
    powers = [int(q) for q in powers]
    if any(q < 1 for q in powers):
        raise DomainError("powers must be positive integers")
    n = sum(powers)
    if n > FUNCTIONAL_MOMENT_CAP:
        raise DomainError(f"total power capped at {FUNCTIONAL_MOMENT_CAP}, got {n}")
    owner = [l for l, q in enumerate(powers) for _ in range(q)]
    total = 0.0
    for p in enumerate_partitions(n):
        weight = marginal_eppf(family, p.sizes, cfg)
        for cell in p.cells():
            exps = [0] * len(powers)
            for item in cell:
                exps[owner[item - 1]] += 1
            weight *= h_moment(tuple(exps))
        total += weight
    return total
