"""Shared numerical substrate: half-line quadrature and special functions.

All integrands are supplied as *log*-integrands.  Integration shifts by the
running maximum so that nothing overflows, and results are reported both in
plain and in log space.  Densities and weights elsewhere in the library are
carried in log space end to end; exponentiation happens at API boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import special as _sp_special

from .errors import DomainError, IntegrationError, PrecisionError

_LOG_DROP = 60.0  # integrand contributions below max - 60 nats are negligible
_X_LIMIT = 700.0  # |log u| beyond this under/overflows exp in float64


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the adaptive quadratures used throughout the library."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class IntegrationResult:
    """Outcome of an adaptive quadrature.

    ``value`` is exp(log_value) and may overflow to inf for huge integrals;
    internal callers should consume ``log_value``.
    """

    value: float
    log_value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool

    def require_converged(self, what: str = "integral") -> "IntegrationResult":
        if not self.converged:
            raise IntegrationError(
                f"quadrature for {what} did not converge: "
                f"log value {self.log_value:.6g}, "
                f"error estimate {self.abs_error_estimate:.3g}"
            )
        return self


def _zero_result(evaluations: int) -> IntegrationResult:
    return IntegrationResult(0.0, -np.inf, 0.0, evaluations, True)


def _shifted_quad(g: Callable[[float], float], a: float, b: float,
                  g_max: float, cfg: QuadratureConfig, evals: int) -> IntegrationResult:
    """Integrate exp(g(x) - g_max) over [a, b] with adaptive QUADPACK panels."""
    count = [evals]

    def f(x):
        count[0] += 1
        v = g(x)
        if not np.isfinite(v):
            return 0.0
        return math.exp(min(v - g_max, 700.0))

    out = _sp_integrate.quad(
        f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions, full_output=1,
    )
    val, abserr = out[0], out[1]
    warned = len(out) > 3
    if val <= 0.0:
        return IntegrationResult(0.0, -np.inf, abserr, count[0], not warned)
    converged = (not warned) and abserr <= max(cfg.abs_tol, cfg.rel_tol * val) * 4.0
    log_value = g_max + math.log(val)
    with np.errstate(over="ignore"):
        plain = float(np.exp(log_value))
        err_plain = (
            float(np.exp(math.log(abserr) + g_max)) if abserr > 0.0 else 0.0
        )
    return IntegrationResult(plain, log_value, err_plain, count[0], converged)


def integrate_halfline(log_f: Callable[[float], float],
                       cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> IntegrationResult:
    """Integrate exp(log_f(u)) over u in (0, inf).

    Works on the substitution u = e^x: the mode of the transformed
    log-integrand is located by a coarse scan plus golden-section refinement,
    the integration window is expanded until the integrand falls 60 nats
    below its peak, and the max-shifted integrand is fed to adaptive panel
    quadrature.  Integrable endpoint singularities (u^{c-1} with c > 0) become
    exponential tails under the substitution and need no special handling.
    """

    evals = [0]

    def g(x: float) -> float:
        evals[0] += 1
        if abs(x) > _X_LIMIT:
            return -np.inf
        v = log_f(math.exp(x))
        return v + x if np.isfinite(v) else -np.inf

    xs = np.linspace(-30.0, 30.0, 181)
    gs = np.array([g(x) for x in xs])
    if not np.any(np.isfinite(gs)):
        xs = np.linspace(-300.0, 300.0, 301)
        gs = np.array([g(x) for x in xs])
        if not np.any(np.isfinite(gs)):
            return _zero_result(evals[0])
    i0 = int(np.nanargmax(np.where(np.isfinite(gs), gs, -np.inf)))

    # Golden-section refinement of the mode between the neighbouring nodes.
    lo = xs[max(i0 - 1, 0)]
    hi = xs[min(i0 + 1, len(xs) - 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
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
    x_mode = x1 if g1 >= g2 else x2
    g_max = max(g1, g2, gs[i0])

    def expand(direction: float) -> float:
        x = x_mode
        step = 1.0
        while True:
            x_next = x + direction * step
            if abs(x_next) >= _X_LIMIT:
                return math.copysign(_X_LIMIT, x_next)
            if g(x_next) < g_max - _LOG_DROP:
                return x_next
            x = x_next
            step = min(step * 1.6, 64.0)

    a = expand(-1.0)
    b = expand(+1.0)
    return _shifted_quad(g, a, b, g_max, cfg, evals[0])


def integrate_interval(log_f: Callable[[float], float], a: float, b: float,
                       cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> IntegrationResult:
    """Integrate exp(log_f(x)) over a bounded interval with a max shift."""
    if not b > a:
        raise DomainError("integration interval must satisfy a < b")
    evals = [0]

    def g(x: float) -> float:
        evals[0] += 1
        v = log_f(x)
        return v if np.isfinite(v) else -np.inf

    xs = np.linspace(a, b, 257)
    gs = np.array([g(x) for x in xs])
    if not np.any(np.isfinite(gs)):
        return _zero_result(evals[0])
    g_max = float(np.max(np.where(np.isfinite(gs), gs, -np.inf)))
    return _shifted_quad(g, a, b, g_max, cfg, evals[0])


def logsumexp(values) -> float:
    return float(_sp_special.logsumexp(np.asarray(values, dtype=float)))


# ---------------------------------------------------------------------------
# Confluent hypergeometric function 1F1
# ---------------------------------------------------------------------------

_HYP_MAX_TERMS = 10_000
_HYP_TOL = 1e-16
_HYP_ASYMPTOTIC_U = 650.0


def _hyp1f1_series(a: float, b: float, z: float) -> float:
    """Taylor series for 1F1(a, b; z); intended for z >= 0 and a, b > 0."""
    term = 1.0
    total = 1.0
    for k in range(_HYP_MAX_TERMS):
        term *= (a + k) * z / ((b + k) * (k + 1))
        total += term
        if abs(term) <= _HYP_TOL * abs(total):
            return total
    raise PrecisionError(
        f"1F1 series failed to converge after {_HYP_MAX_TERMS} terms "
        f"(a={a}, b={b}, z={z})"
    )


def _log_hyp1f1_asymptotic_neg(a: float, b: float, u: float) -> float:
    """log 1F1(a, b; -u) for very large u via the Watson-lemma expansion."""
    total = 1.0
    term = 1.0
    for k in range(60):
        nxt = term * (a + k) * (a + 1.0 - b + k) / ((k + 1.0) * u)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-14 * abs(total):
            break
    if total <= 0:
        raise PrecisionError(f"asymptotic 1F1 lost positivity (a={a}, b={b}, u={u})")
    return (
        math.lgamma(b) - math.lgamma(b - a) - a * math.log(u) + math.log(total)
    )


def log_hyp1f1(a: float, b: float, z: float) -> float:
    """log 1F1(a, b; z) for a > 0, b > 0 and z <= 0.

    The Kummer transform 1F1(a,b;z) = e^z 1F1(b-a,b;-z) turns the alternating
    series into an all-positive one whenever b > a, avoiding the catastrophic
    cancellation the direct series suffers already around z = -30.  Very
    negative arguments switch to the asymptotic expansion.
    """
    if a <= 0 or b <= 0:
        raise DomainError(f"1F1 requires a > 0 and b > 0, got a={a}, b={b}")
    if z > 0:
        return math.log(_hyp1f1_series(a, b, z))
    if z == 0:
        return 0.0
    u = -z
    if b == a:
        return z
    if b < a:
        # Direct alternating series with a cancellation guard.
        value = _hyp1f1_series(a, b, z)
        if value <= 0:
            raise PrecisionError(f"1F1 cancellation for a={a}, b={b}, z={z}")
        return math.log(value)
    if u >= _HYP_ASYMPTOTIC_U:
        return _log_hyp1f1_asymptotic_neg(a, b, u)
    return z + math.log(_hyp1f1_series(b - a, b, u))


def hyp1f1(a: float, b: float, z: float) -> float:
    """1F1(a, b; z) to relative 1e-10 on the domain used here (a, b > 0)."""
    if z > 0:
        return _hyp1f1_series(a, b, z)
    return math.exp(log_hyp1f1(a, b, z))


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind
# ---------------------------------------------------------------------------


def _is_half_integer(order: float) -> bool:
    return abs(order * 2 - round(order * 2)) < 1e-12 and round(order * 2) % 2 != 0


def _log_bessel_k_half(m: int, z: float) -> float:
    """log K_{m+1/2}(z) from the exact finite sum, m >= 0."""
    total = 0.0
    term = 1.0
    for k in range(m + 1):
        if k > 0:
            # ratio of consecutive coefficients (m+k)! / (2^k (m-k)! k!) z^{-k}
            term *= (m + k) * (m - k + 1) / (2.0 * k * z)
        total += term
    return 0.5 * math.log(math.pi / (2.0 * z)) - z + math.log(total)


def log_bessel_k(order: float, z: float) -> float:
    """log K_nu(z), underflow-safe for large z (K_nu ~ sqrt(pi/2z) e^{-z})."""
    if z <= 0:
        raise DomainError(f"K_nu requires z > 0, got z={z}")
    nu = abs(order)  # K_{-nu} = K_nu
    if _is_half_integer(nu):
        return _log_bessel_k_half(int(round(nu - 0.5)), z)
    scaled = _sp_special.kve(nu, z)  # e^z K_nu(z)
    if not np.isfinite(scaled) or scaled <= 0:
        raise PrecisionError(f"K_nu evaluation failed for nu={order}, z={z}")
    return math.log(scaled) - z


def bessel_k(order: float, z: float) -> float:
    """K_nu(z); half-integer orders use the exact finite sum."""
    return math.exp(log_bessel_k(order, z))


# ---------------------------------------------------------------------------
# Truncated negative gamma moments
# ---------------------------------------------------------------------------


def _upper_gamma(s: float, c: float) -> float:
    """Unregularized upper incomplete gamma(s, c) for any real s, c >= 0.

    Non-positive s is reached with the downward recursion
    Gamma(s, c) = (Gamma(s+1, c) - c^s e^{-c}) / s, valid for c > 0.
    """
    if s > 0:
        return float(_sp_special.gammaincc(s, c)) * math.exp(math.lgamma(s))
    if c <= 0:
        raise DomainError(
            "upper incomplete gamma diverges at c = 0 for non-positive order"
        )
    steps = int(math.floor(1 - s))
    s_top = s + steps
    value = _upper_gamma(s_top, c)
    for j in range(steps):
        s_cur = s_top - 1 - j
        value = (value - c ** (s_cur) * math.exp(-c)) / s_cur
    return value


def upper_incomplete_gamma_moment(k_over_alpha: float, shape: float, c: float) -> float:
    """E[G^{-k/alpha} 1{G > c}] for G ~ gamma(shape), i.e.

    integral_c^inf w^{shape - k/alpha - 1} e^{-w} dw / Gamma(shape).
    """
    if shape <= 0:
        raise DomainError("shape must be positive")
    if c < 0:
        raise DomainError("truncation point must be non-negative")
    s = shape - k_over_alpha
    if c == 0 and s <= 0:
        raise DomainError("moment diverges at c = 0 when shape <= k/alpha")
    if c == 0:
        return math.exp(math.lgamma(s) - math.lgamma(shape))
    return _upper_gamma(s, c) * math.exp(-math.lgamma(shape))
