"""Standard normal helpers."""
import math

from scipy.special import ndtr, ndtri

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(x: float) -> float:
    return float(ndtr(x))


def norm_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def norm_ppf(p: float) -> float:
    """Inverse normal CDF, polished with one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0,1), got {p}")
    x = float(ndtri(p))
    return x - (norm_cdf(x) - p) / norm_pdf(x)
