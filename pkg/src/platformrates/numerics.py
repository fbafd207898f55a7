"""Scalar Gaussian primitives: CDF, quantile, bivariate upper-orthant probability.

Deliberately dependency-free (stdlib ``math`` only) so the analytic code paths
never drag in heavyweight imports.  The bivariate routine is the
Drezner-Wesolowsky single-integral reduction in Genz's formulation, evaluated
with a fixed 20-point Gauss-Legendre rule and a separate expansion for
|rho| >= 0.925; absolute accuracy is ~1e-14, far below anything the callers
need.
"""

from __future__ import annotations

import math

__all__ = [
    "require_probability",
    "require_correlation",
    "std_normal_cdf",
    "std_normal_quantile",
    "bvn_upper_orthant",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_TWOPI = 2.0 * math.pi


def require_probability(p: float, name: str = "p", *, open_interval: bool = False) -> float:
    """Validate that ``p`` is a probability; return it as a float.

    With ``open_interval=True`` the endpoints 0 and 1 are rejected too.
    """
    p = float(p)
    if math.isnan(p):
        raise ValueError(f"{name} must be a probability, got nan")
    if open_interval:
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name} must be strictly between 0 and 1, got {p!r}")
    elif not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be between 0 and 1, got {p!r}")
    return p


def require_correlation(rho: float, name: str = "rho") -> float:
    """Validate that ``rho`` is a correlation in [-1, 1]; return it as a float."""
    rho = float(rho)
    if math.isnan(rho) or not -1.0 <= rho <= 1.0:
        raise ValueError(f"{name} must be a correlation in [-1, 1], got {rho!r}")
    return rho


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc (accurate in both tails)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


# Acklam's rational approximation coefficients for the normal quantile.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def _acklam(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > p_high:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def _quantile_lower(q: float) -> float:
    # 0 < q <= 0.5.  Acklam start, one Halley step.  With x <= 0 the erfc-based
    # CDF is a genuinely small number, so the residual carries no cancellation.
    x = _acklam(q)
    e = std_normal_cdf(x) - q
    u = e * _SQRT2PI * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    Acklam's rational approximation polished with one Halley step against the
    erfc-based CDF; the upper tail is routed through the lower tail by symmetry
    so the refinement stays accurate for p near 1.
    """
    p = require_probability(p, "p", open_interval=True)
    if p > 0.5:
        return -_quantile_lower(1.0 - p)
    return _quantile_lower(p)


# 20-point Gauss-Legendre rule on [-1, 1]: positive half nodes and weights.
_GL20_X = (
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
    0.07652652113349733,
)
_GL20_W = (
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
    0.1527533871307259,
)
# The rule mapped onto [0, 2] as Genz uses it: nodes 1 -/+ x, weight w each.
_NODES = tuple(1.0 - x for x in _GL20_X) + tuple(1.0 + x for x in _GL20_X)
_WEIGHTS = _GL20_W + _GL20_W


def _bvnu(h: float, k: float, r: float) -> float:
    """P{X > h, Y > k} for standard bivariate normal with correlation r, |r| < 1."""
    hk = h * k
    bvn = 0.0
    if abs(r) < 0.925:
        if abs(r) > 0.0:
            hs = (h * h + k * k) / 2.0
            asr = math.asin(r) / 2.0
            for w, n in zip(_WEIGHTS, _NODES):
                sn = math.sin(asr * n)
                bvn += w * math.exp((sn * hk - hs) / (1.0 - sn * sn))
            bvn = bvn * asr / _TWOPI
        return bvn + std_normal_cdf(-h) * std_normal_cdf(-k)

    # High-correlation branch: expand about r = +/-1 and integrate the remainder.
    if r < 0.0:
        k = -k
        hk = -hk
    a_sq = (1.0 - r) * (1.0 + r)
    a = math.sqrt(a_sq)
    b_sq = (h - k) * (h - k)
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 80.0
    asr = -(b_sq / a_sq + hk) / 2.0
    if asr > -100.0:
        bvn = a * math.exp(asr) * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq) / 3.0 + c * d * a_sq * a_sq)
    if hk > -100.0:
        b = math.sqrt(b_sq)
        sp = _SQRT2PI * std_normal_cdf(-b / a)
        bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * b_sq * (1.0 - d * b_sq) / 3.0)
    half_a = a / 2.0
    quad = 0.0
    for w, n in zip(_WEIGHTS, _NODES):
        x_sq = (half_a * n) ** 2
        asr = -(b_sq / x_sq + hk) / 2.0
        if asr > -100.0:
            sp = 1.0 + c * x_sq * (1.0 + 5.0 * d * x_sq)
            rs = math.sqrt(1.0 - x_sq)
            ep = math.exp(-(hk / 2.0) * x_sq / ((1.0 + rs) * (1.0 + rs))) / rs
            quad += w * math.exp(asr) * (sp - ep)
    bvn = (half_a * quad - bvn) / _TWOPI
    if r > 0.0:
        return bvn + std_normal_cdf(-max(h, k))
    if h >= k:
        return -bvn
    if h < 0.0:
        return std_normal_cdf(k) - std_normal_cdf(h) - bvn
    return std_normal_cdf(-h) - std_normal_cdf(-k) - bvn


def bvn_upper_orthant(h: float, k: float, rho: float) -> float:
    """P{X > h, Y > k} for a standard bivariate normal pair with correlation rho.

    Exact closed forms at rho = +/-1 and rho = 0; elsewhere the fixed
    20-node Drezner-Wesolowsky/Genz quadrature.  Result is clamped to [0, 1].
    """
    h = float(h)
    k = float(k)
    if not (math.isfinite(h) and math.isfinite(k)):
        raise ValueError(f"h and k must be finite, got {h!r}, {k!r}")
    rho = require_correlation(rho)
    if k < h:
        # Canonical argument order makes the (h, k) symmetry exact.
        h, k = k, h

    if rho == 1.0:
        # X = Y almost surely.
        p = 1.0 - std_normal_cdf(max(h, k))
    elif rho == -1.0:
        # Y = -X almost surely: need X > h and X < -k.
        p = max(0.0, std_normal_cdf(-k) - std_normal_cdf(h))
    else:
        p = _bvnu(h, k, rho)
    return min(1.0, max(0.0, p))
