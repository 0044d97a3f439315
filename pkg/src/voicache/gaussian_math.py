"""
Scalar standard normal utilities needed to moment match the probit likelihood
`Ψ(t·wᵀx)` against a Gaussian belief over `w`.

All functions are pure and work in 64-bit floating point.
"""

import math

import attr
from scipy import special

from voicache.constants import HAZARD_TAIL_THRESHOLD
from voicache.exceptions import NonPositiveVariance


_SQRT_2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def std_normal_pdf(z: float) -> float:
    """
    :param float z: A finite value.
    :rtype: float
    :return: The standard normal density `N(z; 0, 1)`.
    """
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def std_normal_cdf(z: float) -> float:
    """
    :param float z: A finite value.
    :rtype: float
    :return: `Ψ(z)`, the standard normal cumulative distribution function.
    """
    return float(special.ndtr(z))


def log_std_normal_cdf(z: float) -> float:
    """
    :param float z: A finite value.
    :rtype: float
    :return: `log Ψ(z)`, accurate far into the negative tail where `Ψ(z)`
        itself underflows.
    """
    return float(special.log_ndtr(z))


def hazard_ratio(z: float) -> float:
    """
    The ratio `N(z) / Ψ(z)` (inverse Mills ratio of `-z`).

    Direct division is used down to `HAZARD_TAIL_THRESHOLD`. Below that both
    terms head to underflow, so the ratio is taken from the scaled
    complementary error function instead: with `Ψ(z) = erfc(-z/√2) / 2` and
    `erfc(y) = exp(-y²)·erfcx(y)` the Gaussian factors cancel, leaving
    `√(2/π) / erfcx(-z/√2)`, which tends to `-z` as `z → -∞`.

    :param float z: A finite value.
    :rtype: float
    """
    if z >= HAZARD_TAIL_THRESHOLD:
        return std_normal_pdf(z) / std_normal_cdf(z)
    return _SQRT_2_OVER_PI / float(special.erfcx(-z / _SQRT_2))


@attr.s(frozen=True, slots=True)
class ProbitMoments:
    """
    Moments of the tilted density `N(u; mu, var)·Ψ(t·u)` over the scalar
    projection `u = wᵀx`, expressed as corrections to the untilted Gaussian.

    :ivar float log_partition: `log Z`, the log of the zeroth moment.
    :ivar float alpha: First moment correction: the matched mean is
        `mu + alpha·var`.
    :ivar float beta: Second moment correction: the matched variance is
        `var - beta·var²`. Always non-negative for the probit likelihood.
    """

    log_partition = attr.ib()
    alpha = attr.ib()
    beta = attr.ib()

    def matched_mean(self, mu, var):
        return mu + self.alpha * var

    def matched_variance(self, mu, var):
        return var - self.beta * var * var


def probit_moments(mu_proj: float, var_proj: float, t: int) -> ProbitMoments:
    """
    Moment matches `N(u; mu_proj, var_proj)·Ψ(t·u)`.

    With `s = √(var_proj + 1)` and `z = t·mu_proj / s`:

    - `log_partition = log Ψ(z)`;
    - `alpha = t·h(z) / s`, `h` being :func:`hazard_ratio`;
    - `beta = h(z)·(z + h(z)) / s²`.

    :param float mu_proj: Mean of the projection.
    :param float var_proj: Variance of the projection, must be positive.
    :param int t: Label, `+1` or `-1`.
    :rtype: ProbitMoments
    """
    if not var_proj > 0.0:
        raise NonPositiveVariance(
            "Projection variance must be positive but got {!r}".format(var_proj)
        )

    s_squared = var_proj + 1.0
    s = math.sqrt(s_squared)
    z = t * mu_proj / s
    h = hazard_ratio(z)
    # h·(z + h) lies in (0, 1); clipping only guards rounding at the extremes.
    tilt = min(max(h * (z + h), 0.0), 1.0)
    return ProbitMoments(
        log_partition=log_std_normal_cdf(z),
        alpha=t * h / s,
        beta=tilt / s_squared,
    )
