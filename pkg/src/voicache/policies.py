"""
Probing policies sharing one interface, so the full value of information
learner can be compared head to head with simple baselines.

Every policy learns with the same classifier; they only differ in when they
probe and in whether they forget and recall labeled points.
"""

import enum
import functools
from typing import Optional

import attr
import numpy as np

from voicache import constants
from voicache.bayes_linear_gp import Posterior
from voicache.bayes_linear_gp import predictive_prob
from voicache.exceptions import UnknownPolicy
from voicache.voi_engine import compute_vop
from voicache.voi_engine import EngineConfig
from voicache.voi_engine import LearnerState
from voicache.voi_engine import step


class ProbeReason(enum.Enum):
    VOP_POSITIVE = "vop_positive"
    RANDOM_DRAW = "random_draw"
    UNCERTAINTY_BAND = "uncertainty_band"
    NEVER = "never"


def _reason_matches_probe(inst, attribute, value):
    if inst.probe == (value is ProbeReason.NEVER):
        msg = "'{name}' {value} is inconsistent with probe={probe}"
        raise ValueError(msg.format(name=attribute.name, value=value, probe=inst.probe))


@attr.s(frozen=True, slots=True)
class PolicyDecision:
    """
    :ivar bool probe: Whether the label of the point is requested.
    :ivar ProbeReason reason: Why it is requested, `NEVER` when it isn't.
    :ivar float|None vop: Value of probing, for policies that compute it.
    """

    probe: bool = attr.ib(validator=attr.validators.instance_of(bool))
    reason: ProbeReason = attr.ib(validator=_reason_matches_probe)
    vop: Optional[float] = attr.ib(default=None)


_NO_PROBE = ProbeReason.NEVER


def random_policy(p_probe: float, rng: np.random.Generator, x) -> PolicyDecision:
    """
    Probes with probability `p_probe` regardless of the point.

    One number is drawn from `rng` per call, whatever `p_probe` is, so runs
    with the same seed consume the generator identically.
    """
    if not 0.0 <= p_probe <= 1.0:
        raise ValueError("Probe probability must be in [0, 1] but got {!r}".format(p_probe))
    if rng.random() < p_probe:
        return PolicyDecision(True, ProbeReason.RANDOM_DRAW)
    return PolicyDecision(False, _NO_PROBE)


def uncertainty_policy(
    post: Posterior, x, band=constants.UNCERTAINTY_BAND
) -> PolicyDecision:
    """
    Probes when the predictive probability of `x` falls inside `band`, both
    ends included.
    """
    low, high = band
    if low <= predictive_prob(post, x) <= high:
        return PolicyDecision(True, ProbeReason.UNCERTAINTY_BAND)
    return PolicyDecision(False, _NO_PROBE)


def vop_only_policy(state: LearnerState, x, config: EngineConfig) -> PolicyDecision:
    """
    Probes when the value of probing is positive (or zero, with inclusive
    thresholds). This is the seek rule of the full learner too.
    """
    vop = compute_vop(state, x, config)
    if config.should_probe(vop):
        return PolicyDecision(True, ProbeReason.VOP_POSITIVE, vop=vop)
    return PolicyDecision(False, _NO_PROBE, vop=vop)


@attr.s(frozen=True, slots=True)
class Policy:
    """
    A named probe rule.

    :ivar str name: One of `constants.POLICY_NAMES`.
    :ivar bool forgets: Whether cache and recall cycles run after seeking.
    :ivar callable rule: `rule(state, x, config) -> PolicyDecision`.
    """

    name: str = attr.ib(validator=attr.validators.in_(constants.POLICY_NAMES))
    forgets: bool = attr.ib(validator=attr.validators.instance_of(bool))
    rule = attr.ib(validator=attr.validators.is_callable())

    def decide(self, state, x, config):
        return self.rule(state, x, config)


def _random_rule(p_probe, rng, state, x, config):
    return random_policy(p_probe, rng, x)


def _uncertainty_rule(band, state, x, config):
    return uncertainty_policy(state.posterior, x, band)


def create_policy(
    name: str, *, seed: int = 0, random_p: float = 0.05, band=constants.UNCERTAINTY_BAND
) -> Policy:
    """
    :param str name: `voi_full`, `vop_only`, `random` or `uncertain`.
    :param int seed: Seeds the generator owned by the `random` policy.
    :param float random_p: Probe probability of the `random` policy.
    :param tuple[float,float] band: Probed interval of the `uncertain`
        policy.
    :rtype: Policy
    :raise UnknownPolicy: For any other name.
    """
    if name == constants.POLICY_VOI_FULL:
        return Policy(name, True, vop_only_policy)
    if name == constants.POLICY_VOP_ONLY:
        return Policy(name, False, vop_only_policy)
    if name == constants.POLICY_RANDOM:
        if not 0.0 <= random_p <= 1.0:
            raise ValueError("random_p must be in [0, 1] but got {!r}".format(random_p))
        rng = np.random.default_rng(seed)
        return Policy(name, False, functools.partial(_random_rule, random_p, rng))
    if name == constants.POLICY_UNCERTAIN:
        return Policy(name, False, functools.partial(_uncertainty_rule, tuple(band)))
    raise UnknownPolicy(
        "Unknown policy {!r}, expected one of: {}".format(name, ", ".join(constants.POLICY_NAMES))
    )


def run_policy_step(policy: Policy, state: LearnerState, x, oracle, config: EngineConfig):
    """
    Processes one point with the engine loop, using the policy's probe rule
    and skipping cache and recall for policies that don't forget.

    :rtype: tuple[LearnerState,DecisionRecord]
    """
    return step(
        state,
        x,
        oracle,
        config,
        decide_probe=policy.decide,
        cache_and_recall=policy.forgets,
    )
