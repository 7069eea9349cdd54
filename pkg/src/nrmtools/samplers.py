"""Random generation for partitions, the latent variable, and marginal draws.

All samplers consume a caller-owned ``numpy.random.Generator`` (PCG64 via
:func:`nrmtools.families.make_rng`), so a fixed seed reproduces the exact
draw sequence.  Chains sharing a family object are safe to run in parallel;
each chain owns its generator and its mutable state.

Seat probabilities at a fixed tilt u follow the Gibbs form of the
conditional partition law: a new cell opens with weight kappa_1(u) and an
existing cell of size e is joined with weight kappa_{e+1}(u)/kappa_e(u).
The sequential (weighted Chinese restaurant) proposal then carries the
importance weight L(p|u) = prod_r c(r-1) / m_n(u), where c(r) is the seat
normalizer after r items; for the Dirichlet family the normalizers telescope
against m_n(u) and every weight is exactly one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .eppf import (
    log_conditional_eppf,
    u_log_density_given_partition,
    u_log_density_marginal,
)
from .errors import DomainError, IntegrationError, SizeLimitError
from .numerics import DEFAULT_QUADRATURE, QuadratureConfig, integrate_halfline
from .partitions import Partition, enumerate_partitions

EXACT_PARTITION_CAP = 10
_GRID_POINTS = 4096
_GRID_LOG_DROP = 40.0
_SLICE_BURN_IN = 50


@dataclass(frozen=True)
class LatentState:
    """Full latent configuration: tilt u, partition, and unique values."""

    u: float
    partition: Partition
    uniques: Optional[tuple] = None

    def __post_init__(self):
        if self.u <= 0:
            raise DomainError("latent u must be positive")
        if self.uniques is not None and len(self.uniques) != self.partition.n_blocks:
            raise DomainError("uniques must have one entry per cell")


@dataclass(frozen=True)
class WeightedDraw:
    """A partition with the log importance weight of its WCR proposal."""

    partition: Partition
    log_weight: float

    def __post_init__(self):
        if not math.isfinite(self.log_weight):
            raise DomainError("importance weight must be finite")


# ---------------------------------------------------------------------------
# Grid and slice sampling of one-dimensional log densities on (0, inf)
# ---------------------------------------------------------------------------


class GridSampler:
    """Inverse-CDF sampler for an unnormalized log density on (0, inf).

    Works on x = log u: the mode is located by scan plus golden-section
    refinement, the grid is expanded geometrically until the log density has
    fallen 40 nats below the mode on both sides, and samples invert the
    piecewise-linear density between the 4096 nodes.  Construction fails if
    the tails cannot be bracketed down to 1e-8 of the total mass.
    """

    def __init__(self, log_density_u: Callable[[float], float]):
        self._log_density_u = log_density_u

        def g(x: float) -> float:
            if abs(x) > 700.0:
                return -math.inf
            v = log_density_u(math.exp(x))
            return v + x if np.isfinite(v) else -math.inf

        xs = np.linspace(-30.0, 30.0, 181)
        gs = np.array([g(x) for x in xs])
        if not np.any(np.isfinite(gs)):
            raise IntegrationError("grid sampler: density is zero everywhere scanned")
        i0 = int(np.nanargmax(np.where(np.isfinite(gs), gs, -np.inf)))
        lo, hi = xs[max(i0 - 1, 0)], xs[min(i0 + 1, len(xs) - 1)]
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        x1, x2 = hi - phi * (hi - lo), lo + phi * (hi - lo)
        g1, g2 = g(x1), g(x2)
        for _ in range(40):
            if g1 < g2:
                lo, x1, g1 = x1, x2, g2
                x2 = lo + phi * (hi - lo)
                g2 = g(x2)
            else:
                hi, x2, g2 = x2, x1, g1
                x1 = hi - phi * (hi - lo)
                g1 = g(x1)
        self.mode_x = x1 if g1 >= g2 else x2
        g_max = max(g1, g2, float(gs[i0]))

        def expand(direction: float) -> float:
            x, step = self.mode_x, 1.0
            while True:
                nxt = x + direction * step
                if abs(nxt) >= 700.0:
                    return math.copysign(700.0, nxt)
                if g(nxt) < g_max - _GRID_LOG_DROP:
                    return nxt
                x = nxt
                step = min(step * 1.6, 64.0)

        a, b = expand(-1.0), expand(+1.0)
        grid = np.linspace(a, b, _GRID_POINTS)
        logs = np.array([g(x) for x in grid])
        dens = np.exp(np.clip(logs - g_max, -745.0, 0.0))
        widths = np.diff(grid)
        masses = 0.5 * (dens[1:] + dens[:-1]) * widths
        cdf = np.concatenate(([0.0], np.cumsum(masses)))
        total = cdf[-1]
        if total <= 0:
            raise IntegrationError("grid sampler: zero total mass on the grid")
        # tail bracketing: approximate each tail by the exponential fit
        # through the outermost two nodes (inner neighbour vs edge)
        for end in (0, -1):
            d_edge = dens[end]
            d_inner = dens[1] if end == 0 else dens[-2]
            if d_edge <= 0:
                continue
            decay = (
                math.log(max(d_inner, 1e-300)) - math.log(d_edge)
            ) / widths[0 if end == 0 else -1]
            if decay <= 0 or d_edge / decay > 1e-8 * total:
                raise IntegrationError(
                    "grid sampler: cannot bracket 1e-8 tail mass; "
                    "density decays too slowly at the window edge"
                )
        self._grid = grid
        self._dens = dens
        self._cdf = cdf
        self._total = float(total)

    @property
    def mode(self) -> float:
        return math.exp(self.mode_x)

    def log_density_x(self, x: float) -> float:
        v = self._log_density_u(math.exp(x)) if abs(x) <= 700 else -math.inf
        return v + x if np.isfinite(v) else -math.inf

    def sample(self, rng: np.random.Generator) -> float:
        t = rng.random() * self._total
        idx = int(np.searchsorted(self._cdf, t, side="right"))
        idx = min(max(idx, 1), len(self._cdf) - 1)
        x0, x1 = self._grid[idx - 1], self._grid[idx]
        d0, d1 = self._dens[idx - 1], self._dens[idx]
        h = x1 - x0
        rem = t - self._cdf[idx - 1]
        cell = self._cdf[idx] - self._cdf[idx - 1]
        if cell <= 0:
            return math.exp(0.5 * (x0 + x1))
        if abs(d1 - d0) < 1e-14 * max(d0, d1):
            frac = rem / cell
        else:
            # invert integral of the linear density d0 + (d1-d0) s on [0,1]
            a = 0.5 * (d1 - d0)
            disc = d0 * d0 + 4.0 * a * rem / h
            frac = (math.sqrt(max(disc, 0.0)) - d0) / (2.0 * a)
            frac = min(max(frac, 0.0), 1.0)
        return math.exp(x0 + frac * h)


def slice_sample_step(log_f: Callable[[float], float], x0: float, f0: float,
                      rng: np.random.Generator, width: float = 1.0,
                      max_steps: int = 64) -> tuple[float, float]:
    """One univariate slice-sampling update with stepping out and shrinkage."""
    level = f0 - rng.standard_exponential()
    r = rng.random()
    left = x0 - r * width
    right = x0 + (1.0 - r) * width
    steps = max_steps
    while steps > 0 and log_f(left) > level:
        left -= width
        steps -= 1
    steps = max_steps
    while steps > 0 and log_f(right) > level:
        right += width
        steps -= 1
    while True:
        x = rng.uniform(left, right)
        fx = log_f(x)
        if fx > level:
            return x, fx
        if x < x0:
            left = x
        else:
            right = x


# ---------------------------------------------------------------------------
# Latent-variable draws
# ---------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _marginal_grid(family, n: int) -> GridSampler:
    return GridSampler(lambda u: u_log_density_marginal(family, n, u))


@lru_cache(maxsize=2048)
def _posterior_grid(family, sizes: tuple) -> GridSampler:
    return GridSampler(u_log_density_given_partition(family, sizes))


def u_marginal_method(family) -> str:
    """Which route ``sample_u_marginal`` takes for this family."""
    return "direct" if family.has_t_sampler else "grid"


def sample_u_marginal(family, n: int, rng: np.random.Generator,
                      method: str = "auto") -> float:
    """One draw from the marginal law of U_n = Gamma_n / T.

    Families with a total-mass sampler use the exact two-stage draw; the
    rest fall back to inverse-CDF sampling of the marginal density on an
    adaptive log grid.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    if method not in ("auto", "direct", "grid"):
        raise DomainError(f"unknown method {method!r}")
    if method == "auto":
        method = u_marginal_method(family)
    if method == "direct":
        t = family.sample_total_mass(rng)
        return float(rng.gamma(n)) / t
    return _marginal_grid(family, n).sample(rng)


def sample_u_given_partition(family, sizes: Sequence[int], rng: np.random.Generator,
                             method: str = "grid") -> float:
    """One draw from U_n | partition, proportional to
    u^{n-1} e^{-psi(u)} prod_j kappa_{e_j}(u)."""
    sizes = tuple(int(e) for e in sizes)
    if method == "exact":
        value = family.sample_u_posterior(sizes, rng)
        if value is not None:
            return value
        method = "grid"
    grid = _posterior_grid(family, sizes)
    if method == "grid":
        return grid.sample(rng)
    if method == "slice":
        x = grid.mode_x
        fx = grid.log_density_x(x)
        for _ in range(_SLICE_BURN_IN):
            x, fx = slice_sample_step(grid.log_density_x, x, fx, rng)
        return math.exp(x)
    raise DomainError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Seat weights shared by the partition samplers
# ---------------------------------------------------------------------------


class _SeatWeights:
    """Cached Gibbs seat weights at a fixed tilt u."""

    def __init__(self, family, u: float, n_max: int):
        log_k = np.asarray(family.log_kappa_table(n_max + 1, u))
        self.kappa1 = math.exp(log_k[0])
        # ratio[e-1] = kappa_{e+1}(u) / kappa_e(u) for e = 1..n_max
        self.ratio = np.exp(np.diff(log_k))
        self.log_m = family.log_moment(n_max, u) if n_max >= 1 else 0.0
        self._log_m_cache = {n_max: self.log_m}
        self._family = family
        self._u = u

    def log_m_n(self, n: int) -> float:
        if n not in self._log_m_cache:
            self._log_m_cache[n] = self._family.log_moment(n, self._u)
        return self._log_m_cache[n]


def _pick(weights: list[float], rng: np.random.Generator) -> int:
    t = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if t <= acc:
            return i
    return len(weights) - 1


# ---------------------------------------------------------------------------
# Partition samplers at fixed u
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _exact_partition_table(family, n: int, u: float):
    parts = enumerate_partitions(n)
    logs = np.array([log_conditional_eppf(family, p.sizes, u) for p in parts])
    probs = np.exp(logs - logs.max())
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return parts, cdf


def sample_partition_exact(family, n: int, u: float,
                           rng: np.random.Generator) -> Partition:
    """Exact categorical draw over all partitions, weighted by the
    conditional EPPF at u.  Capped at n = 10."""
    if n > EXACT_PARTITION_CAP:
        raise SizeLimitError(
            f"exact partition sampling capped at n = {EXACT_PARTITION_CAP}"
        )
    parts, cdf = _exact_partition_table(family, n, u)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return parts[min(idx, len(parts) - 1)]


def wcr_sis(family, n: int, u: float, rng: np.random.Generator) -> WeightedDraw:
    """Weighted Chinese-restaurant proposal with its importance weight.

    Expectations weighted by exp(log_weight) are unbiased for the
    conditional partition law at u.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    sw = _SeatWeights(family, u, n)
    labels = [1]
    sizes = [1]
    log_norm = math.log(sw.kappa1)  # seat normalizer before the first item
    for _ in range(1, n):
        weights = [sw.ratio[e - 1] for e in sizes]
        weights.append(sw.kappa1)
        log_norm += math.log(sum(weights))
        j = _pick(weights, rng)
        if j == len(sizes):
            sizes.append(1)
            labels.append(len(sizes))
        else:
            sizes[j] += 1
            labels.append(j + 1)
    return WeightedDraw(
        partition=Partition.from_labels(labels),
        log_weight=log_norm - sw.log_m_n(n),
    )


def gibbs_sweep(family, state: LatentState, rng: np.random.Generator,
                base: Optional[Callable] = None) -> LatentState:
    """One systematic-scan reassignment of every item at fixed u.

    Each item is removed and reseated with the Gibbs weights computed from
    the remaining cells, so the conditional partition law at u is invariant.
    Unique values, when present, follow their cells; a fresh cell draws a
    new value from ``base`` (uniques are dropped when no base is supplied).
    """
    u = state.u
    n = state.partition.n
    if n == 1:
        return state
    sw = _SeatWeights(family, u, n)
    labels = [lab - 1 for lab in state.partition.assignment]
    sizes = list(state.partition.sizes)
    keep_uniques = state.uniques is not None and base is not None
    uniques = list(state.uniques) if keep_uniques else None
    for i in range(n):
        lab = labels[i]
        sizes[lab] -= 1
        if sizes[lab] == 0:
            last = len(sizes) - 1
            if lab != last:
                sizes[lab] = sizes[last]
                if uniques is not None:
                    uniques[lab] = uniques[last]
                for t in range(n):
                    if labels[t] == last:
                        labels[t] = lab
            sizes.pop()
            if uniques is not None:
                uniques.pop()
        weights = [sw.ratio[e - 1] for e in sizes]
        weights.append(sw.kappa1)
        j = _pick(weights, rng)
        if j == len(sizes):
            sizes.append(1)
            if uniques is not None:
                uniques.append(base(rng))
        else:
            sizes[j] += 1
        labels[i] = j
    partition = Partition.from_labels(labels)
    if uniques is not None:
        # reorder cell values to the canonical labels
        order: dict[int, int] = {}
        for t, lab in enumerate(labels):
            if lab not in order:
                order[lab] = len(order)
        reordered = [None] * len(uniques)
        for old, new in order.items():
            reordered[new] = uniques[old]
        uniques_out = tuple(reordered)
    else:
        uniques_out = None
    return LatentState(u=u, partition=partition, uniques=uniques_out)


def sample_marginal_M(family, n: int, rng: np.random.Generator,
                      base: Callable, equilibration: int = 50) -> LatentState:
    """One draw of (u, partition, unique values) from the exchangeable
    marginal law of n observations under a homogeneous family.

    u comes from its marginal, the partition from the exact sampler when
    n <= 10 and otherwise from a WCR-initialized Gibbs equilibration, and
    the unique values are iid from the base distribution.
    """
    if not family.is_homogeneous:
        raise DomainError("marginal sampling requires a homogeneous family")
    u = sample_u_marginal(family, n, rng)
    if n <= EXACT_PARTITION_CAP:
        partition = sample_partition_exact(family, n, u, rng)
    else:
        partition = wcr_sis(family, n, u, rng).partition
        state = LatentState(u=u, partition=partition)
        for _ in range(equilibration):
            state = gibbs_sweep(family, state, rng)
        partition = state.partition
    uniques = tuple(base(rng) for _ in range(partition.n_blocks))
    return LatentState(u=u, partition=partition, uniques=uniques)


# ---------------------------------------------------------------------------
# Prediction rule
# ---------------------------------------------------------------------------


def predictive_weights(family, sizes: Sequence[int],
                       cfg: QuadratureConfig = DEFAULT_QUADRATURE
                       ) -> tuple[float, np.ndarray]:
    """Mixture weights of the one-step prediction rule for a homogeneous
    family: mass zeta0 on a fresh base draw and zeta_j on each seen value.

    The weights are the ratios of the extended to the current marginal EPPF
    (the addition rule), computed as the u-integrals

        zeta_j = (1/n) E[ U kappa_{e_j+1}(U)/kappa_{e_j}(U) | partition ],
        zeta0  = (1/n) E[ U kappa_1(U) | partition ],

    which sum to one exactly; residual quadrature error is renormalized.
    For n = 0 all mass is on the fresh draw.
    """
    if not family.is_homogeneous:
        raise DomainError("the reduced prediction rule requires homogeneity")
    sizes = tuple(int(e) for e in sizes)
    if not sizes:
        return 1.0, np.zeros(0)
    if any(e < 1 for e in sizes):
        raise DomainError("cell sizes must be positive")
    n = sum(sizes)

    def log_integral(ext_sizes: tuple) -> float:
        from .eppf import _log_marginal_integrand

        res = integrate_halfline(_log_marginal_integrand(family, ext_sizes), cfg)
        res.require_converged(f"prediction-rule integral for sizes {ext_sizes}")
        return res.log_value

    log_den = log_integral(sizes)
    cache: dict[tuple, float] = {}

    def extended(ext: tuple) -> float:
        key = tuple(sorted(ext))
        if key not in cache:
            cache[key] = math.exp(log_integral(ext) - log_den) / n
        return cache[key]

    zeta0 = extended(sizes + (1,))
    zetas = np.array([
        extended(sizes[:j] + (sizes[j] + 1,) + sizes[j + 1:])
        for j in range(len(sizes))
    ])
    total = zeta0 + zetas.sum()
    return zeta0 / total, zetas / total


# ---------------------------------------------------------------------------
# Weighted (T^{-q}) laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedFamily:
    """View of a family under the total-mass weighting T^{-q}.

    Cumulants are unchanged; every law of U picks up an extra u^q factor,
    so the conditional partition law at fixed u is that of the base family
    while the marginal EPPF integrates u^{n+q-1} e^{-psi} prod kappa with
    the normalizer Gamma(n+q) E[T^{-q}].
    """

    base: object
    q: float

    def __post_init__(self):
        if self.q <= -1.0:
            raise DomainError("weight exponent q must exceed -1")

    @property
    def name(self) -> str:
        return f"{self.base.name}^T-{self.q}"

    def log_w_q(self, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
        """log E[T^{-q}]; the q = 0 case is exactly zero."""
        return _log_w_q_cached(self.base, self.q, cfg)

    def log_conditional_eppf(self, sizes, u: float) -> float:
        return log_conditional_eppf(self.base, sizes, u)

    def u_log_density_given_partition(self, sizes) -> Callable[[float], float]:
        base_log = u_log_density_given_partition(self.base, tuple(sizes))
        q = self.q

        def log_f(u: float) -> float:
            return base_log(u) + q * math.log(u)

        return log_f

    def log_marginal_eppf(self, sizes,
                          cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
        sizes = tuple(int(e) for e in sizes)
        n = sum(sizes)
        if n + self.q <= 0:
            raise DomainError("weighted law needs n + q > 0")
        res = integrate_halfline(self.u_log_density_given_partition(sizes), cfg)
        res.require_converged(f"weighted marginal EPPF for sizes {sizes}")
        return res.log_value - math.lgamma(n + self.q) - self.log_w_q(cfg)

    def marginal_eppf(self, sizes,
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
        return math.exp(self.log_marginal_eppf(sizes, cfg))

    def sample_u_given_partition(self, sizes, rng: np.random.Generator) -> float:
        return _weighted_posterior_grid(self.base, self.q,
                                        tuple(int(e) for e in sizes)).sample(rng)


def weighted_variant(family, q: float) -> WeightedFamily:
    """The T^{-q}-weighted view of a family; q = 0 returns the identity view."""
    return WeightedFamily(base=family, q=float(q))


@lru_cache(maxsize=512)
def _weighted_posterior_grid(base, q: float, sizes: tuple) -> GridSampler:
    view = WeightedFamily(base=base, q=q)
    return GridSampler(view.u_log_density_given_partition(sizes))


@lru_cache(maxsize=512)
def _log_w_q_cached(base, q: float, cfg: QuadratureConfig) -> float:
    if q == 0.0:
        return 0.0
    if q > 0:
        res = integrate_halfline(
            lambda u: (q - 1.0) * math.log(u) - base.psi(u), cfg
        )
        res.require_converged("E[T^-q] integral")
        return res.log_value - math.lgamma(q)
    s = -q  # 0 < s < 1: fractional positive moment E[T^s]
    res = integrate_halfline(
        lambda u: -(s + 1.0) * math.log(u)
        + math.log(-math.expm1(-base.psi(u)))
        if base.psi(u) > 0
        else -math.inf,
        cfg,
    )
    res.require_converged("E[T^s] integral")
    return math.log(s) - math.lgamma(1.0 - s) + res.log_value


# ---------------------------------------------------------------------------
# Laplace-inversion density and the dependent-DP recipe
# ---------------------------------------------------------------------------


def inversion_log_density(family, n: int, y: float) -> float:
    """log density of Y_n = n T / Gamma_n, the real Laplace-inversion law:

        f(y) = (n/y)^{n+1} / Gamma(n+1) * e^{-psi(n/y)} m_n(n/y),

    which converges pointwise to the total-mass density as n grows."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    if y <= 0:
        raise DomainError("y must be positive")
    u = n / y
    return (
        (n + 1) * math.log(u)
        - math.lgamma(n + 1)
        - family.psi(u)
        + family.log_moment(n, u)
    )


def inversion_density(family, n: int, y: float) -> float:
    return math.exp(inversion_log_density(family, n, y))


def dependent_dp_sample(theta: float, delta: float, n: int,
                        rng: np.random.Generator) -> tuple[float, Partition, tuple]:
    """One joint draw from the dependent Dirichlet construction with a gamma
    kernel: V ~ Beta(theta, n), the partition from the Chinese restaurant
    law, and each unique value Y_j = R_j / V with 1/(1+R_j) ~ Beta(e_j, delta).
    """
    if theta <= 0 or delta <= 0:
        raise DomainError("theta and delta must be positive")
    if n < 1:
        raise DomainError("n must be a positive integer")
    labels: list[int] = []
    sizes: list[int] = []
    for i in range(n):
        weights = [float(e) for e in sizes]
        weights.append(theta)
        j = _pick(weights, rng)
        if j == len(sizes):
            sizes.append(1)
        else:
            sizes[j] += 1
        labels.append(j + 1)
    partition = Partition.from_labels(labels)
    v = float(rng.beta(theta, n))
    ys = []
    for e in partition.sizes:
        b = float(rng.beta(e, delta))
        r = (1.0 - b) / b
        ys.append(r / v)
    return v, partition, tuple(ys)
