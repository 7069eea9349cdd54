"""Prior families for normalized random measures.

Each family plugs into the rest of the library through three surfaces: the
tilted cumulants kappa_l(u), the Laplace exponent psi(u), and (where one is
tractable) an exact sampler for the total mass T.  All laws of partitions and
of the latent variable U_n are built from these three ingredients.

Conventions
-----------
* ``log_kappa`` is the primary cumulant interface; plain ``kappa`` checks for
  overflow and never returns a silent infinity.
* The stable family is normalized so that psi(u) = theta * u**alpha, which is
  what the canonical power-law Thorin measure integrates to; the constant is
  exposed as ``stable_scale`` so tests can stay convention-free.
* Total-mass draws consume a caller-owned ``numpy.random.Generator``
  (PCG64-backed); family objects themselves are immutable and shareable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize as _sp_optimize

from . import numerics
from .cumulants import log_moments_from_log_cumulants, cumulants_from_moments, MomentTable
from .errors import CapabilityError, DomainError
from .numerics import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    integrate_halfline,
    integrate_interval,
    log_bessel_k,
    log_hyp1f1,
)

_GG_TRIAL_CAP = 10_000_000
_STICK_TRUNCATION = 1e-10


def make_rng(seed) -> np.random.Generator:
    """The library's portable generator: PCG64 with an explicit 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Thorin measures
# ---------------------------------------------------------------------------


class ThorinMeasure:
    """A measure U on (0, inf) defining a gamma-mixture total mass through

        psi(u) = theta * integral log(1 + u/v) U(dv).

    Implementations provide log integrals of positive integrands against U,
    the total mass (possibly infinite), and sampling from the normalized
    measure when the mass is finite.
    """

    support: tuple[float, float]

    def log_integral(self, log_g: Callable[[float], float]) -> float:
        raise NotImplementedError

    @property
    def total_mass(self) -> float:
        raise NotImplementedError

    @property
    def mean_inverse(self) -> float:
        """E[1/V] under the normalized measure; finite by the integrability
        condition that every admissible measure satisfies."""
        if not math.isfinite(self.total_mass):
            raise CapabilityError("mean_inverse needs a finite Thorin measure")
        return math.exp(
            self.log_integral(lambda v: -math.log(v)) - math.log(self.total_mass)
        )

    def sample(self, rng: np.random.Generator) -> float:
        raise CapabilityError(f"{type(self).__name__} has no normalized sampler")

    def tilt(self, b: float) -> "ThorinMeasure":
        raise NotImplementedError


@dataclass(frozen=True)
class ThorinAtoms(ThorinMeasure):
    """Finite atomic measure sum_i w_i * delta_{v_i}."""

    points: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.weights) or not self.points:
            raise DomainError("atom list must be non-empty and aligned")
        if any(v <= 0 for v in self.points) or any(w <= 0 for w in self.weights):
            raise DomainError("atoms need positive locations and weights")

    @property
    def support(self):
        return (min(self.points), max(self.points))

    def log_integral(self, log_g):
        return numerics.logsumexp(
            [math.log(w) + log_g(v) for v, w in zip(self.points, self.weights)]
        )

    @property
    def total_mass(self):
        return float(sum(self.weights))

    def sample(self, rng):
        probs = np.asarray(self.weights) / self.total_mass
        return float(self.points[rng.choice(len(self.points), p=probs)])

    def tilt(self, b):
        return ThorinAtoms(tuple(v + b for v in self.points), self.weights)


@dataclass(frozen=True)
class ThorinPowerLaw(ThorinMeasure):
    """Density alpha/(Gamma(1-alpha) Gamma(alpha)) (v - shift)^{alpha-1} on
    (shift, inf); the canonical measure of the positive stable law, shifted
    right under exponential tilting.  Infinite total mass."""

    alpha: float
    shift: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("power-law index must lie in (0, 1)")
        if self.shift < 0:
            raise DomainError("shift must be non-negative")

    @property
    def support(self):
        return (self.shift, math.inf)

    @property
    def _log_const(self) -> float:
        a = self.alpha
        return math.log(a) - math.lgamma(1 - a) - math.lgamma(a)

    def log_integral(self, log_g):
        a, s = self.alpha, self.shift

        def log_f(w):
            return self._log_const + (a - 1) * math.log(w) + log_g(w + s)

        res = integrate_halfline(log_f).require_converged("Thorin power-law integral")
        return res.log_value

    @property
    def total_mass(self):
        return math.inf

    def tilt(self, b):
        return ThorinPowerLaw(self.alpha, self.shift + b)


@dataclass(frozen=True)
class ThorinArcsine(ThorinMeasure):
    """Arcsine probability measure on (center - radius, center + radius):
    density (1/pi) (v - lo)^{-1/2} (hi - v)^{-1/2}."""

    center: float
    radius: float
    _nodes: int = 128

    def __post_init__(self):
        if self.radius <= 0 or self.center - self.radius < 0:
            raise DomainError("arcsine support must be a positive interval")

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def _quadrature(self):
        # v = center + radius*cos(pi t), t ~ uniform(0,1), removes the
        # endpoint singularities; Gauss-Legendre in t is then spectral.
        x, w = leggauss(self._nodes)
        t = 0.5 * (x + 1.0)
        return self.center + self.radius * np.cos(np.pi * t), w * 0.5

    def log_integral(self, log_g):
        v, w = self._quadrature()
        return numerics.logsumexp([math.log(wi) + log_g(vi) for vi, wi in zip(v, w)])

    @property
    def total_mass(self):
        return 1.0

    def sample(self, rng):
        return self.center + self.radius * math.cos(math.pi * rng.random())

    def tilt(self, b):
        return ThorinArcsine(self.center + b, self.radius, self._nodes)


@dataclass(frozen=True)
class ThorinDensity(ThorinMeasure):
    """Generic density representation with explicit support bounds.

    Integrability against log(1+u/v) is checked numerically at construction:
    the measure must integrate |log v| near zero and 1/v near infinity.
    """

    log_density: Callable[[float], float]
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo < 0 or not self.hi > self.lo:
            raise DomainError("support must satisfy 0 <= lo < hi")
        if self.lo < 1.0:
            near_zero = self._integral_raw(
                lambda v: math.log(abs(math.log(v))) if v != 1.0 else -math.inf,
                self.lo,
                min(self.hi, 1.0),
            )
            if not near_zero.converged:
                raise DomainError("Thorin density fails the |log v| integrability check")
        if self.hi > 1.0:
            far = self._integral_raw(
                lambda v: -math.log(v), max(self.lo, 1.0), self.hi
            )
            if not far.converged:
                raise DomainError("Thorin density: 1/v tail integral did not converge")

    def _integral_raw(self, log_g, lo, hi):
        def log_f(v):
            return self.log_density(v) + log_g(v)

        if math.isfinite(hi):
            return integrate_interval(log_f, lo, hi)
        if lo > 0:
            return integrate_halfline(lambda w: log_f(w + lo))
        return integrate_halfline(log_f)

    @property
    def support(self):
        return (self.lo, self.hi)

    def log_integral(self, log_g):
        res = self._integral_raw(log_g, self.lo, self.hi)
        res.require_converged("Thorin density integral")
        return res.log_value

    @property
    def total_mass(self):
        return math.exp(self.log_integral(lambda v: 0.0))

    def sample(self, rng):
        lo, hi, cdf = _thorin_density_grid(self)
        t = rng.random() * cdf[-1]
        idx = int(np.searchsorted(cdf, t))
        grid = np.linspace(lo, hi, len(cdf))
        if idx == 0:
            return float(grid[0])
        x0, x1 = grid[idx - 1], grid[idx]
        c0, c1 = cdf[idx - 1], cdf[idx]
        frac = (t - c0) / (c1 - c0) if c1 > c0 else 0.5
        return float(x0 + frac * (x1 - x0))

    def tilt(self, b):
        base = self.log_density
        lo = self.lo
        return ThorinDensity(lambda v: base(v - b), self.lo + b, self.hi + b)


@lru_cache(maxsize=64)
def _thorin_density_grid(measure: ThorinDensity):
    lo, hi = measure.lo, measure.hi
    if not math.isfinite(hi):
        # expand until the density mass beyond the cut is negligible
        hi = max(lo + 1.0, 1.0)
        while True:
            tail = measure._integral_raw(lambda v: 0.0, hi, math.inf)
            if tail.log_value < math.log(_STICK_TRUNCATION) + measure.log_integral(
                lambda v: 0.0
            ):
                break
            hi *= 2.0
            if hi > 1e12:
                raise CapabilityError("Thorin density tail too heavy to grid-sample")
    grid = np.linspace(lo, hi, 4097)
    with np.errstate(over="ignore"):
        dens = np.array(
            [math.exp(min(measure.log_density(float(v)), 700.0)) for v in grid]
        )
    cdf = np.concatenate(([0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(grid))))
    return lo, hi, cdf


def thorin_tilt(thorin: ThorinMeasure, b: float) -> ThorinMeasure:
    """The Thorin measure of the e^{-bT}-tilted law: support shifted right by b."""
    if b <= 0:
        raise DomainError("tilt amount must be strictly positive")
    return thorin.tilt(b)


def first_passage_thorin(p: float) -> ThorinArcsine:
    """Arcsine Thorin measure of the first-passage-time law, 1/2 <= p < 1.

    Supported on (1-b, 1+b) with b = 2 sqrt(p(1-p)); a proper probability
    measure, so the resulting total mass is exactly samplable.
    """
    if not 0.5 <= p < 1.0:
        raise DomainError("first-passage parameter must lie in [1/2, 1)")
    b = 2.0 * math.sqrt(p * (1.0 - p))
    return ThorinArcsine(center=1.0, radius=b)


# ---------------------------------------------------------------------------
# Family base class
# ---------------------------------------------------------------------------


class NrmFamily:
    """Abstract prior family; see the module docstring for the contract."""

    name: str = "abstract"
    has_closed_kappa: bool = True
    has_t_sampler: bool = True
    is_homogeneous: bool = True

    # -- cumulants ---------------------------------------------------------

    def log_kappa(self, l: int, u: float) -> float:
        raise NotImplementedError

    def kappa(self, l: int, u: float) -> float:
        """The l-th exponentially tilted cumulant; raises on overflow."""
        value = math.exp(min(self.log_kappa(l, u), 1e9))
        if not math.isfinite(value):
            raise OverflowError(
                f"kappa_{l}({u}) overflows for {self.name}; use log_kappa"
            )
        return value

    def log_kappa_table(self, n_max: int, u: float) -> np.ndarray:
        return _cached_log_kappa_table(self, n_max, u)

    def _log_kappa_table_impl(self, n_max: int, u: float) -> np.ndarray:
        return np.array([self.log_kappa(l, u) for l in range(1, n_max + 1)])

    # -- moments -----------------------------------------------------------

    def log_moment_table(self, n_max: int, u: float) -> np.ndarray:
        return _cached_log_moment_table(self, n_max, u)

    def _log_moment_table_impl(self, n_max: int, u: float) -> np.ndarray:
        return log_moments_from_log_cumulants(self.log_kappa_table(n_max, u))

    def log_moment(self, n: int, u: float) -> float:
        if n == 0:
            return 0.0
        return float(self.log_moment_table(n, u)[n - 1])

    # -- Laplace exponent and T -------------------------------------------

    def psi(self, u: float) -> float:
        raise NotImplementedError

    def sample_total_mass(self, rng: np.random.Generator) -> float:
        raise CapabilityError(f"{self.name} has no tractable total-mass sampler")

    def sample_u_posterior(self, sizes, rng: np.random.Generator):
        """Exact draw from U_n | partition when a closed form exists, else None."""
        return None

    # -- plumbing ----------------------------------------------------------

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params().items()))
        return f"{self.name}({inner})"


@lru_cache(maxsize=200_000)
def _cached_log_kappa_table(family: NrmFamily, n_max: int, u: float) -> np.ndarray:
    table = family._log_kappa_table_impl(n_max, u)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=200_000)
def _cached_log_moment_table(family: NrmFamily, n_max: int, u: float) -> np.ndarray:
    table = family._log_moment_table_impl(n_max, u)
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------------------
# Concrete families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletFamily(NrmFamily):
    """Gamma-process prior: kappa_l(u) = theta Gamma(l) (1+u)^{-l},
    psi(u) = theta log(1+u), T ~ gamma(theta)."""

    theta: float
    name: str = field(default="dirichlet", init=False)

    def __post_init__(self):
        if self.theta <= 0:
            raise DomainError("total mass theta must be positive")

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        return math.log(self.theta) + math.lgamma(l) - l * math.log1p(u)

    def psi(self, u):
        _check_tilt(u)
        return self.theta * math.log1p(u)

    def sample_total_mass(self, rng):
        return float(rng.gamma(self.theta))

    def sample_u_posterior(self, sizes, rng):
        # 1/(1+U_n) ~ Beta(theta, n) regardless of the cell sizes.
        n = int(sum(sizes))
        b = rng.beta(self.theta, n)
        return (1.0 - b) / b

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class StableFamily(NrmFamily):
    """Positive stable prior of index alpha with psi(u) = theta u^alpha.

    kappa_l(u) = theta alpha u^{alpha-l} Gamma(l-alpha)/Gamma(1-alpha); the
    cumulants diverge at u = 0 for l >= 1, which is reported as a domain
    error.  ``thorin`` carries the canonical power-law Thorin measure used by
    the quadrature cross-checks.
    """

    alpha: float
    theta: float
    name: str = field(default="stable", init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("stable index must lie in (0, 1)")
        if self.theta <= 0:
            raise DomainError("scale theta must be positive")

    @property
    def stable_scale(self) -> float:
        """The constant C with psi(u) = C u^alpha under this normalization."""
        return self.theta

    @property
    def thorin(self) -> ThorinPowerLaw:
        return ThorinPowerLaw(self.alpha)

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        if u == 0:
            raise DomainError("stable cumulants diverge at u = 0")
        a = self.alpha
        return (
            math.log(self.theta * a)
            + (a - l) * math.log(u)
            + math.lgamma(l - a)
            - math.lgamma(1 - a)
        )

    def psi(self, u):
        _check_tilt(u)
        return self.theta * u ** self.alpha

    def sample_total_mass(self, rng):
        return self.theta ** (1.0 / self.alpha) * _sample_unit_stable(self.alpha, rng)

    def sample_u_posterior(self, sizes, rng):
        # theta * U_n^alpha | partition ~ gamma(number of blocks)
        k = len(sizes)
        return (rng.gamma(k) / self.theta) ** (1.0 / self.alpha)

    def params(self):
        return {"alpha": self.alpha, "theta": self.theta}


@dataclass(frozen=True)
class GenGammaFamily(NrmFamily):
    """Exponentially tilted stable prior: psi(u) = theta[(u+b)^alpha - b^alpha],
    kappa_l(u) = theta alpha (u+b)^{alpha-l} Gamma(l-alpha)/Gamma(1-alpha)."""

    alpha: float
    b: float
    theta: float
    name: str = field(default="gen-gamma", init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("index alpha must lie in (0, 1)")
        if self.b < 0:
            raise DomainError("tilt b must be non-negative")
        if self.theta <= 0:
            raise DomainError("scale theta must be positive")

    @property
    def thorin(self) -> ThorinPowerLaw:
        return ThorinPowerLaw(self.alpha, shift=self.b)

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        s = u + self.b
        if s == 0:
            raise DomainError("cumulants diverge at u + b = 0")
        a = self.alpha
        return (
            math.log(self.theta * a)
            + (a - l) * math.log(s)
            + math.lgamma(l - a)
            - math.lgamma(1 - a)
        )

    def psi(self, u):
        _check_tilt(u)
        return self.theta * ((u + self.b) ** self.alpha - self.b ** self.alpha)

    def sample_total_mass(self, rng):
        # rejection from the stable draw with acceptance e^{-b S};
        # expected trials exp(theta b^alpha)
        scale = self.theta ** (1.0 / self.alpha)
        for _ in range(_GG_TRIAL_CAP):
            s = scale * _sample_unit_stable(self.alpha, rng)
            if self.b == 0 or rng.random() < math.exp(-self.b * s):
                return s
        raise RuntimeError(
            f"tilted-stable rejection exceeded {_GG_TRIAL_CAP} trials "
            f"(acceptance rate exp(-{self.theta * self.b ** self.alpha:.3g}))"
        )

    def params(self):
        return {"alpha": self.alpha, "b": self.b, "theta": self.theta}


@dataclass(frozen=True)
class BetaNrmFamily(NrmFamily):
    """NRM built over a beta process with constant concentration c.

    Jumps live on (0, 1]; kappa_l(u) = mass * Gamma(l)Gamma(c+1)/Gamma(l+c)
    * 1F1(l, c+l; -u).  No tractable total-mass sampler exists, so U_n
    operations route through the grid/quadrature paths.
    """

    c: float
    mass: float
    name: str = field(default="beta", init=False)
    has_t_sampler: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.c <= 0:
            raise DomainError("concentration c must be positive")
        if self.mass <= 0:
            raise DomainError("base measure mass must be positive")

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        return (
            math.log(self.mass)
            + math.lgamma(l)
            + math.lgamma(self.c + 1)
            - math.lgamma(l + self.c)
            + log_hyp1f1(l, self.c + l, -u)
        )

    def psi(self, u):
        _check_tilt(u)
        if u == 0:
            return 0.0
        return self.mass * self.c * _beta_levy_integral(self.c, u)

    def params(self):
        return {"c": self.c, "mass": self.mass}


@lru_cache(maxsize=100_000)
def _beta_levy_integral(c: float, u: float) -> float:
    from scipy.integrate import quad

    def integrand(s):
        return (-math.expm1(-u * s)) / s * (1.0 - s) ** (c - 1.0)

    value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=500)
    return value


@dataclass(frozen=True)
class GgcFamily(NrmFamily):
    """Gamma mixture prior defined by an explicit Thorin measure:

        psi(u)     = theta * integral log(1 + u/v) U(dv)
        kappa_l(u) = theta * Gamma(l) * integral (v+u)^{-l} U(dv)

    Atomic measures evaluate exactly; density forms go through quadrature.
    The total mass T = G M factorizes into an independent gamma variable and
    a stick-breaking series over draws from the normalized measure, which is
    how ``sample_total_mass`` proceeds (finite measures only).
    """

    thorin: ThorinMeasure
    theta: float = 1.0
    name: str = field(default="ggc", init=False)

    def __post_init__(self):
        if self.theta <= 0:
            raise DomainError("scale theta must be positive")

    @property
    def has_t_sampler(self) -> bool:  # type: ignore[override]
        return math.isfinite(self.thorin.total_mass)

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        if u == 0 and self.thorin.support[0] == 0:
            raise DomainError("cumulants may diverge at u = 0 for this measure")
        return (
            math.log(self.theta)
            + math.lgamma(l)
            + self.thorin.log_integral(lambda v: -l * math.log(v + u))
        )

    def psi(self, u):
        _check_tilt(u)
        if u == 0:
            return 0.0
        log_int = self.thorin.log_integral(
            lambda v: math.log(math.log1p(u / v)) if u / v > 0 else -math.inf
        )
        return self.theta * math.exp(log_int)

    def sample_total_mass(self, rng):
        mass = self.thorin.total_mass
        if not math.isfinite(mass):
            raise CapabilityError(
                "total-mass sampling needs a finite Thorin measure"
            )
        shape = self.theta * mass
        g = rng.gamma(shape)
        remaining = 1.0
        acc = 0.0
        while remaining > _STICK_TRUNCATION:
            w = rng.beta(1.0, shape)
            acc += w * remaining / self.thorin.sample(rng)
            remaining *= 1.0 - w
        acc += remaining * self.thorin.mean_inverse
        return g * acc

    def params(self):
        lo, hi = self.thorin.support
        return {"theta": self.theta, "support_lo": lo, "support_hi": hi}


@dataclass(frozen=True)
class GigFamily(NrmFamily):
    """Generalized inverse Gaussian total mass (unit scale measure).

    The moments come first here: with w = sqrt(2u + v^2),

        m_n(u) = delta^n w^{-n} K_{n+lam}(delta w) / K_{lam}(delta w),

    and the cumulants follow by inverting the moment recursion; half-integer
    Bessel orders reduce to exact finite sums.  delta and v must not vanish
    simultaneously; delta = 0 degenerates to a gamma total mass and v = 0 to
    an inverse gamma one (the latter needs lam < 0).
    """

    lam: float
    delta: float
    v: float
    name: str = field(default="gig", init=False)
    has_closed_kappa: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.delta < 0 or self.v < 0:
            raise DomainError("delta and v must be non-negative")
        if self.delta == 0 and self.v == 0:
            raise DomainError("delta and v cannot both vanish")
        if self.v == 0 and self.lam >= 0:
            raise DomainError("v = 0 requires lam < 0 (inverse gamma branch)")
        if self.delta == 0 and self.lam <= 0:
            raise DomainError("delta = 0 requires lam > 0 (gamma branch)")

    def _w(self, u: float) -> float:
        return math.sqrt(2.0 * u + self.v * self.v)

    def _log_phi(self, u: float) -> float:
        """log Laplace transform of T at u."""
        if self.delta == 0:
            # gamma(lam, rate v^2/2): phi(u) = (1 + u/rate)^{-lam}
            return -self.lam * math.log1p(2.0 * u / (self.v * self.v))
        w = self._w(u)
        if self.v == 0:
            a = -self.lam
            return (
                math.log(2.0)
                + a * math.log(self.delta * w / 2.0)
                + log_bessel_k(a, self.delta * w)
                - math.lgamma(a)
            )
        return (
            self.lam * (math.log(self.v) - math.log(w))
            + log_bessel_k(self.lam, self.delta * w)
            - log_bessel_k(self.lam, self.delta * self.v)
        )

    def psi(self, u):
        _check_tilt(u)
        if u == 0:
            return 0.0
        return -self._log_phi(u)

    def _log_moment_table_impl(self, n_max, u):
        if self.delta == 0:
            # gamma(lam, rate v^2/2): m_n = (lam)_n / (v^2/2 + u)^n
            rate = self.v * self.v / 2.0 + u
            return np.array(
                [
                    math.lgamma(self.lam + n) - math.lgamma(self.lam) - n * math.log(rate)
                    for n in range(1, n_max + 1)
                ]
            )
        w = self._w(u)
        if w <= 0:
            raise DomainError("moments need 2u + v^2 > 0")
        base = log_bessel_k(self.lam, self.delta * w)
        return np.array(
            [
                n * (math.log(self.delta) - math.log(w))
                + log_bessel_k(n + self.lam, self.delta * w)
                - base
                for n in range(1, n_max + 1)
            ]
        )

    def _log_kappa_table_impl(self, n_max, u):
        moments = MomentTable(u=u, values=np.exp(self._log_moment_table_impl(n_max, u)))
        return np.log(cumulants_from_moments(moments).values)

    def log_kappa(self, l, u):
        _check_order_tilt(l, u)
        return float(self.log_kappa_table(l, u)[l - 1])

    def sample_total_mass(self, rng):
        if self.delta == 0:
            return float(rng.gamma(self.lam) / (self.v * self.v / 2.0))
        if self.v == 0:
            return self.delta * self.delta / 2.0 / float(rng.gamma(-self.lam))
        return _sample_gig(self.lam, self.delta, self.v, rng)

    def params(self):
        return {"lam": self.lam, "delta": self.delta, "v": self.v}


def gig_moment(family: GigFamily, n: int, u: float) -> float:
    """m_n(u) for a GIG total mass via Bessel ratios; n = 0 gives 1."""
    if n < 0:
        raise DomainError("moment order must be non-negative")
    if family.delta == 0:
        raise DomainError("Bessel-ratio moments need delta > 0")
    if n == 0:
        return 1.0
    if u < 0:
        raise DomainError("tilt u must be non-negative")
    return math.exp(family.log_moment(n, u))


# ---------------------------------------------------------------------------
# Low-level samplers
# ---------------------------------------------------------------------------


def _sample_unit_stable(alpha: float, rng: np.random.Generator) -> float:
    """Positive stable draw with E[exp(-lam S)] = exp(-lam^alpha) (Kanter)."""
    u = rng.uniform(0.0, math.pi)
    e = rng.standard_exponential()
    a = (
        math.sin(alpha * u) ** alpha
        * math.sin((1.0 - alpha) * u) ** (1.0 - alpha)
        / math.sin(u)
    ) ** (1.0 / (1.0 - alpha))
    return (a / e) ** ((1.0 - alpha) / alpha)


@lru_cache(maxsize=256)
def _gig_rou_constants(lam: float, omega: float):
    """Ratio-of-uniforms box for the standard GIG(lam, omega) density
    q(x) = x^{lam-1} exp(-omega (x + 1/x) / 2), lam >= 0."""

    def log_q(x):
        if x <= 0:
            return -math.inf
        return (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x)

    mode = ((lam - 1.0) + math.sqrt((lam - 1.0) ** 2 + omega * omega)) / omega
    log_q_mode = log_q(mode)

    def neg_right(t):
        x = mode + math.exp(t)
        return -(t + 0.5 * (log_q(x) - log_q_mode))

    def neg_left(t):
        x = mode / (1.0 + math.exp(-t))
        return -(math.log(mode - x) + 0.5 * (log_q(x) - log_q_mode))

    r = _sp_optimize.minimize_scalar(neg_right, bounds=(-60.0, 60.0), method="bounded")
    l = _sp_optimize.minimize_scalar(neg_left, bounds=(-60.0, 60.0), method="bounded")
    v_plus = math.exp(-r.fun) * 1.05
    v_minus = -math.exp(-l.fun) * 1.05
    return mode, log_q_mode, v_minus, v_plus


def _sample_gig(lam: float, delta: float, v: float, rng: np.random.Generator) -> float:
    """GIG(lam, delta, v) draw by mode-shifted ratio of uniforms on the
    standard two-parameter form, with the lam < 0 branch via reciprocal."""
    scale = delta / v
    omega = delta * v
    flip = lam < 0
    lam_eff = abs(lam)
    mode, log_q_mode, v_minus, v_plus = _gig_rou_constants(lam_eff, omega)

    def log_q(x):
        return (lam_eff - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x)

    while True:
        uu = rng.random()
        vv = rng.uniform(v_minus, v_plus)
        if uu <= 0.0:
            continue
        x = mode + vv / uu
        if x <= 0:
            continue
        if 2.0 * math.log(uu) <= log_q(x) - log_q_mode:
            y = (1.0 / x) if flip else x
            return scale * y


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------


def _check_tilt(u: float):
    if u < 0 or not math.isfinite(u):
        raise DomainError(f"tilt u must be a finite non-negative real, got {u}")


def _check_order_tilt(l: int, u: float):
    if l < 1 or l != int(l):
        raise DomainError(f"cumulant order must be a positive integer, got {l}")
    _check_tilt(u)


def _parse_atoms(text: str) -> ThorinAtoms:
    points, weights = [], []
    for chunk in text.split(","):
        v, _, w = chunk.partition(":")
        points.append(float(v))
        weights.append(float(w) if w else 1.0)
    return ThorinAtoms(tuple(points), tuple(weights))


def family_from_config(config: dict) -> NrmFamily:
    """Build a family from a flat key/value mapping (CLI flags, config files).

    Recognized names: dirichlet, stable, gen-gamma, beta, ggc-atoms,
    first-passage, gig.
    """
    cfg = {k.replace("-", "_"): v for k, v in config.items()}
    name = str(cfg.pop("family", "")).lower()

    def need(key):
        if key not in cfg or cfg[key] is None:
            raise DomainError(f"family {name!r} requires parameter {key!r}")
        return cfg[key]

    def opt(key, default):
        value = cfg.get(key)
        return default if value is None else value

    if name == "dirichlet":
        return DirichletFamily(theta=float(need("theta")))
    if name == "stable":
        return StableFamily(alpha=float(need("alpha")), theta=float(opt("theta", 1.0)))
    if name in ("gen-gamma", "gen_gamma", "gengamma"):
        return GenGammaFamily(
            alpha=float(need("alpha")), b=float(need("b")), theta=float(opt("theta", 1.0))
        )
    if name in ("beta", "beta-nrm", "beta_nrm"):
        return BetaNrmFamily(c=float(need("c")), mass=float(opt("mass", 1.0)))
    if name in ("ggc-atoms", "ggc_atoms"):
        return GgcFamily(thorin=_parse_atoms(str(need("atoms"))),
                         theta=float(opt("theta", 1.0)))
    if name in ("first-passage", "first_passage"):
        return GgcFamily(thorin=first_passage_thorin(float(need("p"))),
                         theta=float(opt("theta", 1.0)))
    if name == "gig":
        return GigFamily(lam=float(need("lam")), delta=float(need("delta")),
                         v=float(need("v")))
    raise DomainError(f"unknown family {name!r}")
