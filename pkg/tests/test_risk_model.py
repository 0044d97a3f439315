import math

import numpy as np
import pytest
from scipy import special

from voicache.bayes_linear_gp import adf_update
from voicache.bayes_linear_gp import LabeledPoint
from voicache.bayes_linear_gp import Posterior
from voicache.bayes_linear_gp import prior_posterior
from voicache.common_testing import loop_buffer_risk
from voicache.exceptions import DimensionMismatch
from voicache.risk_model import buffer_risk
from voicache.risk_model import expected_probe_cost
from voicache.risk_model import ProbeCosts
from voicache.risk_model import RiskMatrix


def posterior_with_prob(p):
    """
    1D posterior for which `x = (1)` has predictive probability `p` of `+1`.
    """
    return Posterior(mean=[math.sqrt(2.0) * special.ndtri(p)], cov=[[1.0]])


def random_posterior(rng, dim):
    post = prior_posterior(dim)
    for i in range(5):
        post = adf_update(post, LabeledPoint(i, rng.normal(size=dim), int(rng.choice([1, -1]))))
    return post


def test_buffer_risk_hand_evaluation() -> None:
    unit = RiskMatrix(1.0, 1.0)
    assert buffer_risk(posterior_with_prob(0.5), [], unit) == 0.0
    assert buffer_risk(posterior_with_prob(0.5), np.empty((0, 1)), unit) == 0.0

    # Classified +1, wrong with probability 1 - p.
    assert buffer_risk(posterior_with_prob(0.8), [[1.0]], unit) == pytest.approx(0.2, abs=1e-12)
    # Classified -1, wrong with probability p.
    asymmetric = RiskMatrix(r12=2.0, r21=1.0)
    assert buffer_risk(posterior_with_prob(0.3), [[1.0]], asymmetric) == pytest.approx(
        0.6, abs=1e-12
    )
    assert buffer_risk(posterior_with_prob(0.8), [[1.0], [-1.0]], asymmetric) == pytest.approx(
        0.2 + 2.0 * 0.2, abs=1e-12
    )


def test_buffer_risk_tie() -> None:
    # A zero margin is classified +1 and charged as a potential false positive.
    risk = RiskMatrix(r12=2.0, r21=3.0)
    assert buffer_risk(prior_posterior(2), [[1.0, 0.0]], risk) == pytest.approx(1.5)


def test_buffer_risk_against_loop(rng) -> None:
    risk = RiskMatrix(r12=2.0, r21=1.0)
    for _ in range(50):
        post = random_posterior(rng, 3)
        buffer = rng.normal(size=(7, 3))
        assert buffer_risk(post, buffer, risk) == pytest.approx(
            loop_buffer_risk(post, buffer, risk), rel=1e-12, abs=1e-15
        )
        assert buffer_risk(post, list(buffer), risk) == buffer_risk(post, buffer, risk)


def test_buffer_risk_properties(rng) -> None:
    risk = RiskMatrix(r12=2.0, r21=1.0)
    for _ in range(50):
        post = random_posterior(rng, 3)
        first = rng.normal(size=(4, 3))
        second = rng.normal(size=(3, 3))
        whole = np.vstack([first, second])

        total = buffer_risk(post, whole, risk)
        assert total == pytest.approx(
            buffer_risk(post, first, risk) + buffer_risk(post, second, risk), rel=1e-12
        )
        assert buffer_risk(post, whole, risk.scaled(3.5)) == pytest.approx(3.5 * total, rel=1e-12)
        assert 0.0 <= total <= len(whole) * max(risk.r12, risk.r21)


def test_buffer_risk_dimension_mismatch() -> None:
    with pytest.raises(DimensionMismatch):
        buffer_risk(prior_posterior(2), [[1.0, 0.0, 1.0]], RiskMatrix(1.0, 1.0))
    with pytest.raises(DimensionMismatch):
        buffer_risk(prior_posterior(2), [1.0, 0.0], RiskMatrix(1.0, 1.0))


def test_risk_matrix_validation() -> None:
    assert RiskMatrix(0.0, 0.0).scaled(2.0) == RiskMatrix(0.0, 0.0)
    with pytest.raises(ValueError, match="'r12' must be non-negative"):
        RiskMatrix(-1.0, 1.0)
    with pytest.raises(TypeError):
        RiskMatrix("1", 1.0)


def test_expected_probe_cost() -> None:
    assert expected_probe_cost(1.0, ProbeCosts(2.0, 1.0)) == 2.0
    assert expected_probe_cost(0.5, ProbeCosts(1.0, 1.0)) == 1.0
    assert expected_probe_cost(0.3, ProbeCosts(2.0, 1.0)) == pytest.approx(1.3)
    assert expected_probe_cost(0.0, ProbeCosts(2.0, 1.0)) == 1.0

    for invalid in (-0.1, 1.5, math.nan):
        with pytest.raises(ValueError):
            expected_probe_cost(invalid, ProbeCosts(1.0, 1.0))


def test_probe_cost_for_label() -> None:
    costs = ProbeCosts(cost_pos=2.0, cost_neg=1.0)
    assert costs.cost_for(1) == 2.0
    assert costs.cost_for(-1) == 1.0
    with pytest.raises(ValueError):
        costs.cost_for(0)
    with pytest.raises(ValueError, match="'cost_neg' must be non-negative"):
        ProbeCosts(1.0, -2.0)
