"""Round-count planning, threshold selection and binomial diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleRounds, ParameterError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf needs a finite argument, got {x}")
    # erfc on the negative side keeps relative accuracy in both tails
    if x < 0:
        return 0.5 * math.erfc(-x / _SQRT2)
    return 1.0 - 0.5 * math.erfc(x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


# Acklam's rational approximation to the normal quantile (rel. error ~1.15e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(u: float) -> float:
    if u < _P_LOW:
        t = math.sqrt(-2.0 * math.log(u))
        return (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / \
            ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    if u > 1.0 - _P_LOW:
        return -_acklam(1.0 - u)
    s = u - 0.5
    r = s * s
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def std_normal_quantile(prob: float) -> float:
    """Inverse of std_normal_cdf: rational approximation plus one Halley step."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"quantile needs prob in (0, 1), got {prob}")
    if prob == 0.5:
        return 0.0
    x = _acklam(prob)
    # polish against the lower tail when prob > 0.5 to avoid cancellation in 1 - prob
    if prob > 0.5:
        e = (1.0 - prob) - 0.5 * math.erfc(x / _SQRT2)
    else:
        e = std_normal_cdf(x) - prob
    step = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - step / (1.0 + 0.5 * x * step)


@dataclass(frozen=True)
class ConfidenceParams:
    p: float
    q_prime: float
    d: float

    def __post_init__(self):
        for name in ("p", "q_prime", "d"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
                raise ParameterError(f"{name} must lie in (0, 1), got {v!r}")
        if self.p + self.q_prime <= 1.0:
            raise ParameterError(f"p+q' must exceed 1 (got p={self.p}, q'={self.q_prime})")


def tail_bounds(d: float) -> tuple[float, float]:
    """(a, b) with P(Z >= a) = d and b = -a."""
    if not 0.5 < d < 1.0:
        raise ParameterError(f"d must lie in (0.5, 1) so that a < 0 < b, got {d}")
    a = std_normal_quantile(1.0 - d)
    return a, -a


def _round_sig(x: float, digits: int = 12) -> float:
    if x == 0.0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - math.floor(math.log10(abs(x))))


def required_rounds(params: ConfidenceParams) -> int:
    """Smallest N whose threshold interval is non-empty under the Gaussian approximation."""
    p, qp = params.p, params.q_prime
    a, b = tail_bounds(params.d)
    inner = ((b * math.sqrt(1.0 - qp) - a * math.sqrt(p)) / (p + qp - 1.0)) ** 2
    return max(1, math.ceil(_round_sig(inner)))


def threshold_interval(params: ConfidenceParams, n: int) -> tuple[float, float]:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    p, qp = params.p, params.q_prime
    a, b = tail_bounds(params.d)
    root = math.sqrt(n)
    c_low = b * math.sqrt(1.0 - qp) / root + 1.0 - qp
    c_high = a * math.sqrt(p) / root + p
    if c_low > c_high:
        raise InfeasibleRounds(n, required_rounds(params), c_low, c_high)
    return c_low, c_high


def choose_threshold(c_low: float, c_high: float) -> float:
    if c_low > c_high:
        raise InfeasibleRounds(None, None, c_low, c_high)
    return 0.5 * (c_low + c_high)


def achievable_confidence(p: float, q_prime: float, n: int) -> tuple[float, float]:
    """Best confidence d' reachable with ``n`` rounds, and its symmetric threshold."""
    if not (0.0 < p < 1.0 and 0.0 < q_prime < 1.0):
        raise ParameterError(f"p and q' must lie in (0, 1), got p={p}, q'={q_prime}")
    if p + q_prime <= 1.0:
        raise ParameterError(f"p+q' must exceed 1 (got p={p}, q'={q_prime})")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    sp, sf = math.sqrt(p), math.sqrt(1.0 - q_prime)
    c = (p * sf + (1.0 - q_prime) * sp) / (sp + sf)
    z = (1.0 - p - q_prime) * math.sqrt(n) / (sp + sf)
    return 1.0 - std_normal_cdf(z), c


def count_threshold(c: float, n: int) -> int:
    """Smallest k with k/n >= c, matching the float comparison used by fusion."""
    k = min(max(math.ceil(c * n), 0), n + 1)
    while k > 0 and (k - 1) / n >= c:
        k -= 1
    while k <= n and k / n < c:
        k += 1
    return k


def log_binom_pmf(k: int, n: int, prob: float) -> float:
    if prob == 0.0:
        return 0.0 if k == 0 else -math.inf
    if prob == 1.0:
        return 0.0 if k == n else -math.inf
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + k * math.log(prob) + (n - k) * math.log1p(-prob))


def _logsumexp(terms) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def binom_tail(n: int, prob: float, k_lo: int, k_hi: int) -> float:
    """P(k_lo <= Bin(n, prob) <= k_hi), summed in log-space."""
    k_lo, k_hi = max(k_lo, 0), min(k_hi, n)
    if k_lo > k_hi:
        return 0.0
    # sum the shorter side and complement, so results near 1 keep their precision
    if (k_hi - k_lo) > n // 2 and (k_lo == 0 or k_hi == n):
        if k_lo == 0:
            rest = _logsumexp(log_binom_pmf(k, n, prob) for k in range(k_hi + 1, n + 1))
        else:
            rest = _logsumexp(log_binom_pmf(k, n, prob) for k in range(0, k_lo))
        return min(1.0, max(0.0, -math.expm1(rest)))
    return min(1.0, math.exp(_logsumexp(log_binom_pmf(k, n, prob) for k in range(k_lo, k_hi + 1))))


def exact_confidence_counts(p: float, false_pos: float, n: int, k_min: int) -> tuple[float, float]:
    """(P(obstacle fused 1), P(free fused 0)) when fusion outputs 1 iff count >= k_min."""
    return binom_tail(n, p, k_min, n), binom_tail(n, false_pos, 0, k_min - 1)


def exact_confidence(params: ConfidenceParams, n: int, c: float) -> tuple[float, float]:
    """Exact binomial confidences of threshold fusion, bypassing the Gaussian approximation."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0.0 < c < 1.0:
        raise ParameterError(f"c must lie in (0, 1), got {c}")
    return exact_confidence_counts(params.p, 1.0 - params.q_prime, n, count_threshold(c, n))


@dataclass(frozen=True)
class PlanResult:
    params: ConfidenceParams
    n_required: int
    n: int
    c_low: float
    c_high: float
    c_chosen: float
    a: float
    b: float
    exact_confidence_obstacle: float
    exact_confidence_free: float

    def as_dict(self) -> dict:
        return {
            "p": self.params.p,
            "q_prime": self.params.q_prime,
            "d": self.params.d,
            "n_required": self.n_required,
            "n": self.n,
            "c_low": self.c_low,
            "c_high": self.c_high,
            "c_chosen": self.c_chosen,
            "a": self.a,
            "b": self.b,
            "count_threshold": count_threshold(self.c_chosen, self.n),
            "exact_confidence_obstacle": self.exact_confidence_obstacle,
            "exact_confidence_free": self.exact_confidence_free,
        }


def make_plan(params: ConfidenceParams, n: int | None = None) -> PlanResult:
    """Full planning pass; ``n`` defaults to the required round count."""
    n_req = required_rounds(params)
    n = n_req if n is None else n
    a, b = tail_bounds(params.d)
    lo, hi = threshold_interval(params, n)
    c = choose_threshold(lo, hi)
    obs, free = exact_confidence(params, n, c)
    return PlanResult(params, n_req, n, lo, hi, c, a, b, obs, free)
