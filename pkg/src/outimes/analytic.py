"""Expected occupation time of the centered OU process.

The expectation is

    E[M_{T,[a,b]}] = 1/2 int_0^T erf(alpha b / sqrt(1 - exp(-2 lam t)))
                              - erf(alpha a / sqrt(1 - exp(-2 lam t))) dt,

with alpha = sqrt(lam) / sigma.  Two evaluation routes are provided:

* expected_occupation_direct: adaptive quadrature of the time-domain
  integral.  The integrand is bounded and continuous on [0, T] once the
  t = 0 limit is substituted, so this route is robust and serves as the
  reference.

* expected_occupation_split: the substitution s = C / sqrt(1 - exp(-2 lam t))
  maps each single-endpoint integral to (C^2/lam) int_{s0}^inf
  erf(s) / (s (s^2 - C^2)) ds, which is split into a Taylor zone [s0, s1]
  with an exact closed form, a Simpson section [s1, s2], and a log tail
  beyond s2 where erf is replaced by 1.

Both routes require 2 lam T < 37: beyond that exp(-2 lam T) drops under
double-precision resolution and the substitution becomes meaningless.

erf is scipy.special.erf throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

from .occupation import ObservationWindow
from .quadrature import adaptive_simpson
from .sde import OUParams

__all__ = [
    "PrecisionGuardError",
    "check_precision_guard",
    "AnalyticConfig",
    "ErfIntegralSpec",
    "variance_k",
    "choose_s1",
    "taylor_i1_closed_form",
    "simpson_i2",
    "tail_i3",
    "erf_time_integral_split",
    "erf_time_integral",
    "expected_occupation_direct",
    "expected_occupation_split",
]

PRECISION_GUARD = 37.0
_SQRT_PI = math.sqrt(math.pi)


class PrecisionGuardError(ValueError):
    """2 lam T >= 37: exp(-2 lam T) is below double-precision resolution."""


def check_precision_guard(lam: float, t_end: float) -> None:
    if 2.0 * lam * t_end >= PRECISION_GUARD:
        raise PrecisionGuardError(
            f"precision guard: 2 * lam * t_end = {2.0 * lam * t_end:g} >= {PRECISION_GUARD:g}; "
            "1 - exp(-2 lam T) is indistinguishable from 1 in double precision"
        )


@dataclass(frozen=True)
class AnalyticConfig:
    """Tolerances of the analytic evaluators.

    eps_taylor bounds the Taylor-zone replacement error of the split scheme;
    s2_min is the tail cut (erf(s) differs from 1 by less than 1e-44 beyond
    10); simpson_rel_tol drives the middle section; oracle_rel_tol drives
    the time-domain quadrature.
    """

    eps_taylor: float = 1e-8
    s2_min: float = 10.0
    # 1e-12 rather than a looser setting: window expectations assemble as a
    # difference of two single-endpoint integrals, and far-out windows need
    # the absolute error of each to stay near 1e-10
    simpson_rel_tol: float = 1e-12
    oracle_rel_tol: float = 1e-12

    def __post_init__(self):
        for name in ("eps_taylor", "simpson_rel_tol", "oracle_rel_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.s2_min >= 10.0:
            raise ValueError("s2_min must be at least 10")


def variance_k(params: OUParams, t: float) -> float:
    """Variance sigma^2 (1 - exp(-2 lam t)) / (2 lam) of the centered
    marginal at time t > 0."""
    if not params.centered:
        raise ValueError("variance_k is defined for the centered process (mu = u0 = 0)")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return params.sigma**2 * (-math.expm1(-2.0 * params.lam * t)) / (2.0 * params.lam)


def choose_s1(s0: float, c: float, eps: float, s0_sq_minus_c_sq: float | None = None) -> float:
    """Upper end of the Taylor zone: s0 + (s0 (s0^2 - C^2) eps)^(1/4).

    With this choice the quadratic-Taylor replacement error over [s0, s1]
    is bounded by 2 eps / (3 sqrt(pi)) ~= 0.376 eps.  An accurately
    precomputed s0^2 - C^2 may be passed to avoid cancellation when s0 is
    very close to |C|.
    """
    abs_c = abs(c)
    if not s0 > abs_c:
        raise ValueError(f"s0 must exceed |C|, got s0={s0}, C={c}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    gap = s0_sq_minus_c_sq if s0_sq_minus_c_sq is not None else s0 * s0 - abs_c * abs_c
    return s0 + (s0 * gap * eps) ** 0.25


@dataclass(frozen=True)
class ErfIntegralSpec:
    """One substituted-integral problem int_0^T erf(C / sqrt(1 - e^{-2 lam t})) dt.

    Derived break points: s0 = |C| / sqrt(1 - exp(-2 lam T)), s1 from
    choose_s1, s2 the tail cut.  Degenerate orderings are normalised at
    construction: s0 >= s2 collapses the Taylor and Simpson zones (tail
    taken from s0), and s1 is clamped to s2.  s0_minus_abs_c and
    s0_sq_minus_c_sq are carried in cancellation-free form because s0
    approaches |C| as lam T grows.
    """

    c: float
    lam: float
    t_end: float
    s0: float
    s1: float
    s2: float
    eps: float
    s0_minus_abs_c: float
    s1_minus_abs_c: float
    s0_sq_minus_c_sq: float

    def __post_init__(self):
        if self.c == 0 or not math.isfinite(self.c):
            raise ValueError("C must be finite and nonzero")
        check_precision_guard(self.lam, self.t_end)
        abs_c = abs(self.c)
        if not (abs_c < self.s0 <= self.s1 <= self.s2):
            raise ValueError(
                f"break points must satisfy |C| < s0 <= s1 <= s2, "
                f"got |C|={abs_c}, s0={self.s0}, s1={self.s1}, s2={self.s2}"
            )

    @classmethod
    def from_problem(
        cls, c: float, lam: float, t_end: float, config: AnalyticConfig | None = None
    ) -> "ErfIntegralSpec":
        config = config or AnalyticConfig()
        if c == 0:
            raise ValueError("C must be nonzero; a zero endpoint contributes nothing")
        if not (math.isfinite(lam) and lam > 0):
            raise ValueError(f"lam must be positive, got {lam}")
        if not (math.isfinite(t_end) and t_end > 0):
            raise ValueError(f"t_end must be positive, got {t_end}")
        check_precision_guard(lam, t_end)
        abs_c = abs(c)
        u = math.exp(-2.0 * lam * t_end)
        denom = -math.expm1(-2.0 * lam * t_end)  # 1 - u without cancellation
        root = math.sqrt(denom)
        s0 = abs_c / root
        s0_minus_abs_c = abs_c * u / (root * (1.0 + root))
        s0_sq_minus_c_sq = abs_c * abs_c * u / denom
        s2 = config.s2_min
        if s0 >= s2:
            # tiny remaining range: the whole of [s0, inf) is tail territory
            s1 = s2 = s0
            s1_minus_abs_c = s0_minus_abs_c
        else:
            s1 = choose_s1(s0, abs_c, config.eps_taylor, s0_sq_minus_c_sq=s0_sq_minus_c_sq)
            s1_minus_abs_c = (s1 - s0) + s0_minus_abs_c
            if s1 > s2:
                s1 = s2
                s1_minus_abs_c = s2 - abs_c
        return cls(
            c=c,
            lam=lam,
            t_end=t_end,
            s0=s0,
            s1=s1,
            s2=s2,
            eps=config.eps_taylor,
            s0_minus_abs_c=s0_minus_abs_c,
            s1_minus_abs_c=s1_minus_abs_c,
            s0_sq_minus_c_sq=s0_sq_minus_c_sq,
        )


def taylor_i1_closed_form(spec: ErfIntegralSpec) -> float:
    """Exact integral of T2(s) / (s (s^2 - C^2)) over the Taylor zone [s0, s1].

    T2 is the quadratic Taylor polynomial of erf at s0,
    T2(s) = erf(s0) + 2 e^{-s0^2}/sqrt(pi) * ((s - s0) - s0 (s - s0)^2).

    By partial fractions 1/(s (s^2 - C^2)) = -1/(C^2 s) + 1/(2 C^2 (s - C))
    + 1/(2 C^2 (s + C)); the polynomial parts of T2(s)/(s - r) cancel across
    the three poles because the weights sum to zero (and so do the weighted
    poles), leaving only log terms with weights T2 evaluated at the poles.
    """
    if spec.s1 == spec.s0:
        return 0.0
    abs_c = abs(spec.c)
    s0, s1 = spec.s0, spec.s1
    e0 = float(erf(s0))
    q = 2.0 * math.exp(-s0 * s0) / _SQRT_PI

    def t2_at(offset: float) -> float:
        # T2(s0 + offset)
        return e0 + q * (offset - s0 * offset * offset)

    d = s1 - s0
    s0_minus_c = spec.s0_minus_abs_c
    s1_minus_c = d + s0_minus_c
    log_zero = math.log(s1 / s0)
    log_minus = math.log(s1_minus_c / s0_minus_c)
    log_plus = math.log((s1 + abs_c) / (s0 + abs_c))
    inv_2c2 = 0.5 / (abs_c * abs_c)
    return (
        -2.0 * inv_2c2 * t2_at(-s0) * log_zero
        + inv_2c2 * t2_at(-s0_minus_c) * log_minus
        + inv_2c2 * t2_at(-(s0 + abs_c)) * log_plus
    )


def simpson_i2(spec: ErfIntegralSpec, config: AnalyticConfig | None = None) -> float:
    """Adaptive Simpson value of int_{s1}^{s2} erf(s) / (s (s^2 - C^2)) ds.

    Integrated in x = ln(s - C).  The factor s - C folds into dx, which
    leaves a smooth bounded integrand even when s1 sits a boundary layer
    away from C (large lam T), and s - C = e^x needs no subtraction.
    """
    config = config or AnalyticConfig()
    if spec.s1 == spec.s2:
        return 0.0
    abs_c = abs(spec.c)
    x_lo = math.log(spec.s1_minus_abs_c)
    x_hi = math.log(spec.s2 - abs_c)

    def integrand(x):
        s = abs_c + np.exp(x)
        return erf(s) / (s * (s + abs_c))

    return adaptive_simpson(integrand, x_lo, x_hi, rel_tol=config.simpson_rel_tol)


def tail_i3(spec: ErfIntegralSpec) -> float:
    """Tail int_{s2}^inf with erf replaced by its limit 1:
    (1 / (2 C^2)) ln(s2^2 / (s2^2 - C^2))."""
    abs_c = abs(spec.c)
    s2 = spec.s2
    if not s2 > abs_c:
        raise ValueError(f"tail cut must exceed |C|, got s2={s2}, C={spec.c}")
    if s2 < 10.0:
        raise ValueError(f"tail cut must be at least 10, got {s2}")
    ratio = abs_c / s2
    if ratio * ratio <= 0.5:
        log_term = -math.log1p(-ratio * ratio)
    else:
        # |C| close to s2: 1 - ratio^2 cancels, so build ln(s2^2/(s2^2 - C^2))
        # from the factors.  In the collapsed case s2 = s0 the gap s2 - C is
        # the cancellation-free value carried by the spec; otherwise C and s2
        # share a binade and the subtraction is exact.
        gap = spec.s0_minus_abs_c if s2 == spec.s0 else s2 - abs_c
        log_term = 2.0 * math.log(s2) - math.log(gap) - math.log(s2 + abs_c)
    return log_term / (2.0 * abs_c * abs_c)


def erf_time_integral_split(spec: ErfIntegralSpec, config: AnalyticConfig | None = None) -> float:
    """int_0^T erf(C / sqrt(1 - exp(-2 lam t))) dt via the split scheme.

    Computed as (C^2 / lam) (I1 + I2 + I3) on |C|; negative C returns the
    negated value since erf is odd.
    """
    config = config or AnalyticConfig()
    i1 = taylor_i1_closed_form(spec) if spec.s1 > spec.s0 else 0.0
    i2 = simpson_i2(spec, config) if spec.s2 > spec.s1 else 0.0
    i3 = tail_i3(spec)
    value = (spec.c * spec.c / spec.lam) * (i1 + i2 + i3)
    return -value if spec.c < 0 else value


def erf_time_integral(
    c: float, lam: float, t_end: float, config: AnalyticConfig | None = None
) -> float:
    """Split-scheme value of int_0^T erf(C / sqrt(1 - exp(-2 lam t))) dt.

    C = 0 gives 0 directly; the substitution is never invoked for it.
    """
    config = config or AnalyticConfig()
    check_precision_guard(lam, t_end)
    if c == 0:
        return 0.0
    spec = ErfIntegralSpec.from_problem(c, lam, t_end, config)
    return erf_time_integral_split(spec, config)


def _sign(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def _occupation_integrand(t: float, lam: float, alpha_a: float, alpha_b: float) -> float:
    denom = -math.expm1(-2.0 * lam * t)
    if denom <= 0.0:
        # t = 0 limit: the erf arguments run to sign(endpoint) * inf
        return _sign(alpha_b) - _sign(alpha_a)
    root = math.sqrt(denom)
    return float(erf(alpha_b / root)) - float(erf(alpha_a / root))


def _require_centered(params: OUParams) -> None:
    if not params.centered:
        raise ValueError(
            "expected occupation formulas hold for the centered process (mu = u0 = 0)"
        )


def expected_occupation_direct(
    params: OUParams, window: ObservationWindow, config: AnalyticConfig | None = None
) -> float:
    """Expected occupation time by adaptive time-domain quadrature."""
    config = config or AnalyticConfig()
    _require_centered(params)
    check_precision_guard(params.lam, window.t_end)
    if window.a == -math.inf and window.b == math.inf:
        return window.t_end
    alpha = math.sqrt(params.lam) / params.sigma
    value, _ = quad(
        _occupation_integrand,
        0.0,
        window.t_end,
        args=(params.lam, alpha * window.a, alpha * window.b),
        epsabs=1e-13,
        epsrel=config.oracle_rel_tol,
        limit=300,
    )
    return 0.5 * value


def expected_occupation_split(
    params: OUParams, window: ObservationWindow, config: AnalyticConfig | None = None
) -> float:
    """Expected occupation time assembled from two split-scheme integrals.

    Finite endpoints route through the substitution; infinite endpoints
    contribute +-T directly (erf(+-inf) = +-1).
    """
    config = config or AnalyticConfig()
    _require_centered(params)
    check_precision_guard(params.lam, window.t_end)
    alpha = math.sqrt(params.lam) / params.sigma

    def endpoint_term(endpoint: float) -> float:
        if endpoint == math.inf:
            return window.t_end
        if endpoint == -math.inf:
            return -window.t_end
        if endpoint == 0.0:
            return 0.0
        return erf_time_integral(alpha * endpoint, params.lam, window.t_end, config)

    if window.a == -window.b and math.isfinite(window.b) and window.b > 0:
        # symmetric window: 1/2 (F(c) - F(-c)) = F(c) by oddness, one integral
        return endpoint_term(window.b)
    return 0.5 * (endpoint_term(window.b) - endpoint_term(window.a))
