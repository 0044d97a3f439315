"""
Misclassification risk over the context buffer and the price of probing.

Both are measured in the same currency, so a risk reduction can be weighed
directly against the cost of asking for a label.
"""

from typing import Sequence

import attr
import numpy as np
from scipy import special

from voicache.bayes_linear_gp import Posterior
from voicache.constants import LABELS
from voicache.constants import POSITIVE_LABEL
from voicache.exceptions import DimensionMismatch
from voicache.extra_attr_validators import non_negative


@attr.s(frozen=True, slots=True)
class RiskMatrix:
    """
    Off-diagonal entries of the 2x2 risk matrix; correct classifications cost
    nothing.

    :ivar float r12: Cost of classifying a true `+1` as `-1`.
    :ivar float r21: Cost of classifying a true `-1` as `+1`.
    """

    r12: float = attr.ib(validator=non_negative)
    r21: float = attr.ib(validator=non_negative)

    def scaled(self, factor):
        return RiskMatrix(r12=self.r12 * factor, r21=self.r21 * factor)


@attr.s(frozen=True, slots=True)
class ProbeCosts:
    """
    Label-dependent price of asking for a label.

    :ivar float cost_pos: Price when the true label turns out to be `+1`.
    :ivar float cost_neg: Price when the true label turns out to be `-1`.
    """

    cost_pos: float = attr.ib(validator=non_negative)
    cost_neg: float = attr.ib(validator=non_negative)

    def cost_for(self, label):
        """
        :param int label: The label the probe revealed.
        :rtype: float
        :return: The price actually paid for that probe.
        """
        if label not in LABELS:
            raise ValueError("Probe label must be +1 or -1 but got {!r}".format(label))
        return self.cost_pos if label == POSITIVE_LABEL else self.cost_neg


def _buffer_matrix(post, buffer):
    xs = np.asarray(buffer, dtype=np.float64)
    if xs.size == 0:
        return xs.reshape(0, post.dim)
    if xs.ndim != 2 or xs.shape[1] != post.dim:
        raise DimensionMismatch(
            "Expected buffer rows of dimension {} but got shape {}".format(post.dim, xs.shape)
        )
    return xs


def buffer_risk(post: Posterior, buffer: Sequence, risk: RiskMatrix) -> float:
    """
    Total expected misclassification cost of the Bayes point classifier over
    the buffer:

        J = Σ r12·1[w̄ᵀx < 0]·p + r21·1[w̄ᵀx ≥ 0]·(1 - p)

    where `p` is the predictive probability of `+1` under the same posterior
    that classifies. A margin of exactly zero is classified `+1`, so it is
    charged as a potential false positive.

    :param Posterior post:
    :param sequence buffer: Feature vectors (or a 2D array with one per row).
    :param RiskMatrix risk:
    :rtype: float
    """
    xs = _buffer_matrix(post, buffer)
    if xs.shape[0] == 0:
        return 0.0

    margins = xs @ post.mean
    variances = np.einsum("ij,jk,ik->i", xs, post.cov, xs)
    p = special.ndtr(margins / np.sqrt(variances + 1.0))
    per_point = np.where(margins < 0.0, risk.r12 * p, risk.r21 * (1.0 - p))
    return float(np.sum(per_point))


def expected_probe_cost(p_pos: float, costs: ProbeCosts) -> float:
    """
    Expected price of a probe when the label is `+1` with probability `p_pos`.

    :rtype: float
    """
    if not 0.0 <= p_pos <= 1.0:
        raise ValueError("Probability must be in [0, 1] but got {!r}".format(p_pos))
    return costs.cost_pos * p_pos + costs.cost_neg * (1.0 - p_pos)
