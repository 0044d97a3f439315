"""
Independent reference computations that could help in applications' tests.

They share no numerics with the library besides `fit_ep` (used as the
full-refit reference): moments come from numerical integration, posteriors
from dense grids and risks from plain loops.
"""

import math
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy import integrate
from scipy import special

from voicache.bayes_linear_gp import EPOptions
from voicache.bayes_linear_gp import fit_ep
from voicache.bayes_linear_gp import LabeledPoint
from voicache.bayes_linear_gp import Posterior
from voicache.risk_model import ProbeCosts
from voicache.risk_model import RiskMatrix


TIGHT_EP_OPTIONS = EPOptions(tolerance=1e-10, max_sweeps=200)


def tilted_moments_by_quadrature(mu: float, var: float, t: int) -> Tuple[float, float, float]:
    """
    Integrates `N(u; mu, var)·Ψ(t·u)` numerically.

    :rtype: tuple[float,float,float]
    :return: Normalizer `Z`, mean and variance of the tilted density.
    """
    sd = math.sqrt(var)
    # Over y = (u - mu)/sd the Gaussian factor is standard; the probit step
    # sits at y0, where quad needs a breakpoint.
    y0 = min(max(-mu / sd, -9.5), 9.5)

    def integrate_moment(f):
        value, _ = integrate.quad(
            lambda y: f(mu + sd * y) * math.exp(-0.5 * y * y) * special.ndtr(t * (mu + sd * y)),
            -10.0,
            10.0,
            points=[y0],
            epsabs=0.0,
            epsrel=1e-10,
            limit=400,
        )
        return value / math.sqrt(2.0 * math.pi)

    z = integrate_moment(lambda u: 1.0)
    mean = integrate_moment(lambda u: u) / z
    variance = integrate_moment(lambda u: (u - mean) ** 2) / z
    return z, mean, variance


def loop_buffer_risk(post: Posterior, buffer: Sequence, risk: RiskMatrix) -> float:
    """
    Buffer risk computed one point at a time.
    """
    total = 0.0
    for x in buffer:
        x = np.asarray(x, dtype=np.float64)
        margin = float(np.dot(post.mean, x))
        variance = float(np.dot(x, np.dot(post.cov, x)))
        p = float(special.ndtr(margin / math.sqrt(variance + 1.0)))
        if margin < 0.0:
            total += risk.r12 * p
        else:
            total += risk.r21 * (1.0 - p)
    return total


def quadrature_adf(post: Posterior, x, t: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gaussian projection of `post × Ψ(t·wᵀx)` with the projection moments
    obtained by quadrature. Only the projection `wᵀx` is affected by the
    likelihood, so the update is a rank-one correction along `Σx`.

    :rtype: tuple[numpy.ndarray,numpy.ndarray]
    :return: Mean and covariance.
    """
    x = np.asarray(x, dtype=np.float64)
    cov_x = post.cov @ x
    q = float(x @ cov_x)
    mu = float(post.mean @ x)
    _, tilted_mean, tilted_var = tilted_moments_by_quadrature(mu, q, t)
    mean = post.mean + cov_x * (tilted_mean - mu) / q
    cov = post.cov - np.outer(cov_x, cov_x) * (q - tilted_var) / (q * q)
    return mean, cov


def brute_force_vop(
    post: Posterior,
    buffer: Sequence,
    x,
    k_horiz: float,
    risk: RiskMatrix,
    probe_costs: ProbeCosts,
) -> float:
    """
    Value of probing `x` from quadrature-backed hypothetical updates.
    """
    x = np.asarray(x, dtype=np.float64)
    variance = float(x @ post.cov @ x)
    p = float(special.ndtr(float(post.mean @ x) / math.sqrt(variance + 1.0)))

    current = loop_buffer_risk(post, buffer, risk)
    expected = 0.0
    for t, weight in ((1, p), (-1, 1.0 - p)):
        mean, cov = quadrature_adf(post, x, t)
        expected += weight * loop_buffer_risk(Posterior(mean, cov), buffer, risk)
    cost = probe_costs.cost_pos * p + probe_costs.cost_neg * (1.0 - p)
    return k_horiz * (current - expected) / len(buffer) - cost


def refit_vof(
    points: Sequence[LabeledPoint], id: int, buffer: Sequence, risk: RiskMatrix, dim: int
) -> float:
    """
    Value of forgetting point `id`, with both posteriors fit from scratch.
    """
    full = fit_ep(points, dim, TIGHT_EP_OPTIONS)
    reduced = fit_ep([p for p in points if p.id != id], dim, TIGHT_EP_OPTIONS)
    return loop_buffer_risk(full, buffer, risk) - loop_buffer_risk(reduced, buffer, risk)


def refit_vor(
    points: Sequence[LabeledPoint],
    recalled: LabeledPoint,
    buffer: Sequence,
    risk: RiskMatrix,
    dim: int,
) -> float:
    """
    Value of recalling `recalled`, with both posteriors fit from scratch.
    """
    current = fit_ep(points, dim, TIGHT_EP_OPTIONS)
    extended = fit_ep(list(points) + [recalled], dim, TIGHT_EP_OPTIONS)
    return loop_buffer_risk(current, buffer, risk) - loop_buffer_risk(extended, buffer, risk)


def grid_posterior(
    points: Sequence[LabeledPoint], limit: float = 5.0, resolution: int = 401
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and covariance of the exact 2D posterior `N(w; 0, I)·∏ Ψ(t·wᵀx)`,
    integrated on a dense grid over `[-limit, limit]²`.
    """
    axis = np.linspace(-limit, limit, resolution)
    w0, w1 = np.meshgrid(axis, axis, indexing="ij")
    log_density = -0.5 * (w0**2 + w1**2)
    for point in points:
        log_density += special.log_ndtr(point.t * (w0 * point.x[0] + w1 * point.x[1]))

    weights = np.exp(log_density - log_density.max())
    weights /= weights.sum()
    mean = np.array([np.sum(weights * w0), np.sum(weights * w1)])
    d0 = w0 - mean[0]
    d1 = w1 - mean[1]
    cov = np.array(
        [
            [np.sum(weights * d0 * d0), np.sum(weights * d0 * d1)],
            [np.sum(weights * d0 * d1), np.sum(weights * d1 * d1)],
        ]
    )
    return mean, cov


def monte_carlo_predictive_prob(
    post: Posterior, x, n_samples: int, rng: np.random.Generator
) -> float:
    """
    Estimates the probability of `+1` by averaging the probit likelihood over
    weights sampled from the posterior.
    """
    samples = rng.multivariate_normal(post.mean, post.cov, size=n_samples)
    return float(np.mean(special.ndtr(samples @ np.asarray(x, dtype=np.float64))))
