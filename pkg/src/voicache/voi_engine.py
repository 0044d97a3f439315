"""
Value of information driven learner over a stream.

For each observed point the engine runs three cycles, each of them followed by
an update of the classifier:

- seek: probe for the label of the new point when its value of probing (VOP)
  is positive;
- cache: move to the cache every active labeled point whose value of
  forgetting (VOF) is positive;
- recall: bring back every cached point whose value of recalling (VOR) is
  positive.

All values are risk reductions over the context buffer (see
:mod:`voicache.risk_model`), estimated with cheap ADF updates and exact site
removals instead of full refits.

A :class:`LearnerState` is an immutable snapshot; :func:`step` returns a new
one together with a :class:`DecisionRecord` of everything decided.
"""

import logging
import math
from typing import Callable
from typing import Dict
from typing import Optional
from typing import Tuple

import attr
import numpy as np

from voicache import constants
from voicache.bayes_linear_gp import adf_update
from voicache.bayes_linear_gp import downdate_site
from voicache.bayes_linear_gp import EPOptions
from voicache.bayes_linear_gp import fit_ep
from voicache.bayes_linear_gp import LabeledPoint
from voicache.bayes_linear_gp import Posterior
from voicache.bayes_linear_gp import predictive_prob
from voicache.bayes_linear_gp import prior_posterior
from voicache.debug import is_voicache_debug_enabled
from voicache.exceptions import DimensionMismatch
from voicache.exceptions import EmptyBuffer
from voicache.exceptions import InvariantViolation
from voicache.exceptions import NearSingularCavity
from voicache.exceptions import OracleFailure
from voicache.exceptions import UnknownActivePoint
from voicache.exceptions import UnknownCachedPoint
from voicache.extra_attr_validators import positive
from voicache.extra_attr_validators import tuple_of
from voicache.risk_model import buffer_risk
from voicache.risk_model import expected_probe_cost
from voicache.risk_model import ProbeCosts
from voicache.risk_model import RiskMatrix


logger = logging.getLogger(__name__)

LabelOracle = Callable[[int], int]
"""Answers the true label of a point given its id (its arrival index)."""


def _is_positive_int(inst, attribute, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        msg = "'{name}' must be a positive integer but got {value!r}"
        raise ValueError(msg.format(name=attribute.name, value=value))


@attr.s(frozen=True, slots=True)
class EngineConfig:
    """
    :ivar int s_buffer: Capacity of the context buffer.
    :ivar float k_horiz: Optimization horizon: the number of future points a
        risk reduction is expected to benefit.
    :ivar RiskMatrix risk:
    :ivar ProbeCosts probe_costs:
    :ivar bool refit_ep: When enabled, the posterior is refit with EP over the
        active set after every cycle that changed it, instead of relying only
        on incremental updates.
    :ivar bool inclusive_thresholds: Probe when VOP is zero too (`VOP ≥ 0`).
        Forgetting and recalling always require a strictly positive value.
    :ivar EPOptions ep_options: Used when `refit_ep` is enabled.
    """

    s_buffer: int = attr.ib(validator=_is_positive_int)
    k_horiz: float = attr.ib(validator=positive)
    risk: RiskMatrix = attr.ib(validator=attr.validators.instance_of(RiskMatrix))
    probe_costs: ProbeCosts = attr.ib(validator=attr.validators.instance_of(ProbeCosts))
    refit_ep: bool = attr.ib(default=False, validator=attr.validators.instance_of(bool))
    inclusive_thresholds: bool = attr.ib(
        default=False, validator=attr.validators.instance_of(bool)
    )
    ep_options: EPOptions = attr.ib(
        factory=EPOptions, validator=attr.validators.instance_of(EPOptions)
    )

    def should_probe(self, vop):
        if self.inclusive_thresholds:
            return vop >= 0.0
        return vop > 0.0


@attr.s(frozen=True, slots=True, eq=False)
class LearnerState:
    """
    :ivar Posterior posterior: Classifier belief; it has one site per active
        point.
    :ivar tuple[LabeledPoint] active: Labeled points in use by the
        classifier, in ascending id order.
    :ivar tuple[LabeledPoint] cache: Labeled points set aside, in ascending id
        order.
    :ivar tuple[numpy.ndarray] buffer: Most recent feature vectors, oldest
        first.
    :ivar int step: Number of points observed so far, which is also the id
        the next observed point gets.
    """

    posterior: Posterior = attr.ib(validator=attr.validators.instance_of(Posterior))
    active: Tuple[LabeledPoint, ...] = attr.ib(default=(), validator=tuple_of(LabeledPoint))
    cache: Tuple[LabeledPoint, ...] = attr.ib(default=(), validator=tuple_of(LabeledPoint))
    buffer: Tuple[np.ndarray, ...] = attr.ib(default=(), validator=tuple_of(np.ndarray))
    step: int = attr.ib(default=0)

    @property
    def dim(self):
        return self.posterior.dim

    def active_ids(self):
        return tuple(p.id for p in self.active)

    def cached_ids(self):
        return tuple(p.id for p in self.cache)

    def find_active(self, id):
        for point in self.active:
            if point.id == id:
                return point
        raise UnknownActivePoint("Point {} is not active".format(id))

    def find_cached(self, id):
        for point in self.cache:
            if point.id == id:
                return point
        raise UnknownCachedPoint("Point {} is not cached".format(id))


@attr.s(frozen=True, slots=True, eq=False)
class DecisionRecord:
    """
    Everything the engine decided while processing one point.

    :ivar int step: Step index.
    :ivar int point_id: Id given to the observed point (equal to `step`).
    :ivar float|None vop: Value of probing, when the probe rule computed it.
    :ivar PolicyDecision decision: The probe decision and its reason.
    :ivar bool probed:
    :ivar int|None probe_label: Label revealed by the probe.
    :ivar float probe_cost_incurred: Actual price paid for the probe.
    :ivar dict[int,float] vof_values: VOF of every point active after the
        seek cycle (`-inf` for non-removable points).
    :ivar tuple[int] cached_ids: Points moved to the cache, ascending.
    :ivar dict[int,float] vor_values: VOR of every point cached after the
        cache cycle.
    :ivar tuple[int] recalled_ids: Points moved back to the active set,
        ascending.
    """

    step: int = attr.ib()
    point_id: int = attr.ib()
    vop: Optional[float] = attr.ib()
    decision = attr.ib()
    probed: bool = attr.ib()
    probe_label: Optional[int] = attr.ib()
    probe_cost_incurred: float = attr.ib()
    vof_values: Dict[int, float] = attr.ib(factory=dict, converter=dict)
    cached_ids: Tuple[int, ...] = attr.ib(default=(), converter=tuple)
    vor_values: Dict[int, float] = attr.ib(factory=dict, converter=dict)
    recalled_ids: Tuple[int, ...] = attr.ib(default=(), converter=tuple)


@attr.s(frozen=True, slots=True, eq=False)
class ReplayOracle:
    """
    Label oracle answering from the hidden labels of a recorded stream.

    :ivar dict[int,int] labels: True label per point index.
    """

    labels: Dict[int, int] = attr.ib(converter=dict)

    @classmethod
    def from_stream(cls, stream):
        """
        :param iterable[StreamPoint] stream:
        :rtype: ReplayOracle
        """
        return cls({point.index: point.true_label for point in stream})

    def __call__(self, point_id):
        try:
            return self.labels[point_id]
        except KeyError:
            raise OracleFailure("No label recorded for point {}".format(point_id))


def initial_state(dim: int) -> LearnerState:
    """
    :param int dim: Dimension of the (bias augmented) features.
    :rtype: LearnerState
    :return: A learner with the prior classifier and empty sets.
    """
    return LearnerState(posterior=prior_posterior(dim))


def _feature_vector(state, x):
    x = np.array(x, dtype=np.float64)
    if x.shape != (state.dim,):
        raise DimensionMismatch(
            "Expected features of dimension {} but got shape {}".format(state.dim, x.shape)
        )
    x.setflags(write=False)
    return x


def _require_buffer(state):
    if not state.buffer:
        raise EmptyBuffer("Values of information need at least one buffered point")
    return state.buffer


def _value_of_forgetting(post, id, buffer, risk, current_risk):
    try:
        cavity, _ = downdate_site(post, id)
    except NearSingularCavity:
        return -math.inf
    return current_risk - buffer_risk(cavity, buffer, risk)


def _value_of_recalling(post, point, buffer, risk, current_risk):
    return current_risk - buffer_risk(adf_update(post, point), buffer, risk)


def compute_vop(state: LearnerState, x, config: EngineConfig) -> float:
    """
    Value of probing for the label of `x`:

        k_horiz·(J - (J⁺·p + J⁻·(1 - p))) / |B| - expected probe cost

    where `J` is the current buffer risk, `J⁺`/`J⁻` the risks after a
    hypothetical ADF update with label `+1`/`-1` and `p` the current
    predictive probability of `+1`.

    :param LearnerState state: State whose buffer already holds `x`.
    :param x: Features of the point being considered.
    :param EngineConfig config:
    :rtype: float
    """
    buffer = _require_buffer(state)
    x = _feature_vector(state, x)
    post = state.posterior

    current = buffer_risk(post, buffer, config.risk)
    p = predictive_prob(post, x)
    if_positive = buffer_risk(
        adf_update(post, LabeledPoint(state.step, x, constants.POSITIVE_LABEL)),
        buffer,
        config.risk,
    )
    if_negative = buffer_risk(
        adf_update(post, LabeledPoint(state.step, x, constants.NEGATIVE_LABEL)),
        buffer,
        config.risk,
    )
    delta = (current - (if_positive * p + if_negative * (1.0 - p))) / len(buffer)
    return config.k_horiz * delta - expected_probe_cost(p, config.probe_costs)


def compute_vof(state: LearnerState, id: int, config: EngineConfig) -> float:
    """
    Value of forgetting an active point: the buffer risk reduction obtained by
    removing its site from the posterior.

    :rtype: float
    :return: `J - J'`, or `-inf` when the site can't be removed reliably.
    """
    state.find_active(id)
    buffer = _require_buffer(state)
    current = buffer_risk(state.posterior, buffer, config.risk)
    return _value_of_forgetting(state.posterior, id, buffer, config.risk, current)


def compute_vor(state: LearnerState, id: int, config: EngineConfig) -> float:
    """
    Value of recalling a cached point: the buffer risk reduction obtained by
    putting it back into the posterior with its known label. Recalling is
    free, the label was paid for when first probed.

    :rtype: float
    """
    point = state.find_cached(id)
    buffer = _require_buffer(state)
    current = buffer_risk(state.posterior, buffer, config.risk)
    return _value_of_recalling(state.posterior, point, buffer, config.risk, current)


def _refit(state, config):
    if not config.refit_ep:
        return state
    posterior = fit_ep(state.active, state.dim, config.ep_options)
    return attr.evolve(state, posterior=posterior)


def observe(state: LearnerState, x, config: EngineConfig) -> LearnerState:
    """
    Appends `x` to the buffer, discarding the oldest points beyond capacity.

    :rtype: LearnerState
    """
    x = _feature_vector(state, x)
    buffer = (state.buffer + (x,))[-config.s_buffer :]
    return attr.evolve(state, buffer=buffer)


@attr.s(frozen=True, slots=True, eq=False)
class SeekOutcome:
    """
    :ivar PolicyDecision decision:
    :ivar int|None label: Label revealed when the point was probed.
    :ivar float cost: Price paid for the probe.
    """

    decision = attr.ib()
    label: Optional[int] = attr.ib(default=None)
    cost: float = attr.ib(default=0.0)

    @property
    def probed(self):
        return self.label is not None


def seek_cycle(
    state: LearnerState,
    x,
    oracle: LabelOracle,
    config: EngineConfig,
    decide_probe=None,
) -> Tuple[LearnerState, SeekOutcome]:
    """
    Decides whether to probe the point just observed and, if so, asks the
    oracle for its label and adds it to the active set.

    :param LearnerState state: State whose buffer already holds `x`.
    :param x: Features of the point, whose id is `state.step`.
    :param LabelOracle oracle:
    :param EngineConfig config:
    :param callable|None decide_probe: `decide_probe(state, x, config)`
        returning a `PolicyDecision`. Defaults to probing on positive VOP.
    :rtype: tuple[LearnerState,SeekOutcome]
    """
    if decide_probe is None:
        from voicache.policies import vop_only_policy

        decide_probe = vop_only_policy

    x = _feature_vector(state, x)
    decision = decide_probe(state, x, config)
    if not decision.probe:
        return state, SeekOutcome(decision)

    point_id = state.step
    label = oracle(point_id)
    if isinstance(label, bool) or label not in constants.LABELS:
        raise OracleFailure("Oracle returned {!r} for point {}".format(label, point_id))

    point = LabeledPoint(point_id, x, label)
    state = attr.evolve(
        state,
        posterior=adf_update(state.posterior, point),
        active=state.active + (point,),
    )
    state = _refit(state, config)
    cost = config.probe_costs.cost_for(label)
    logger.debug("Step %s: probed, label %+d, cost %s", point_id, label, cost)
    return state, SeekOutcome(decision, label=label, cost=cost)


def cache_cycle(
    state: LearnerState, config: EngineConfig
) -> Tuple[LearnerState, Dict[int, float], Tuple[int, ...]]:
    """
    Computes the VOF of every active point on the current posterior and moves
    all points with positive value to the cache, removing their sites in
    ascending id order.

    :rtype: tuple[LearnerState,dict[int,float],tuple[int]]
    :return: The new state, the VOF of every active point and the ids moved
        to the cache.
    """
    if not state.active or not state.buffer:
        return state, {}, ()

    post = state.posterior
    current = buffer_risk(post, state.buffer, config.risk)
    vof_values = {
        point.id: _value_of_forgetting(post, point.id, state.buffer, config.risk, current)
        for point in state.active
    }

    state, cached = forget_points(
        state, [id for id, value in vof_values.items() if value > 0.0], config
    )
    if cached:
        logger.info("Step %s: cached points %s", state.step, list(cached))
    return state, vof_values, cached


def forget_points(
    state: LearnerState, ids, config: EngineConfig
) -> Tuple[LearnerState, Tuple[int, ...]]:
    """
    Moves active points to the cache, removing their sites one after the
    other in ascending id order.

    Points whose site can't be removed reliably stay active.

    :param LearnerState state:
    :param iterable[int] ids: Ids of active points.
    :param EngineConfig config:
    :rtype: tuple[LearnerState,tuple[int]]
    :return: The new state and the ids actually moved to the cache.
    """
    ids = sorted(ids)
    for id in ids:
        state.find_active(id)

    post = state.posterior
    cached = []
    for id in ids:
        try:
            post, _ = downdate_site(post, id)
        except NearSingularCavity:
            logger.warning("Step %s: point %s can't be removed, keeping it active", state.step, id)
            continue
        cached.append(id)

    if not cached:
        return state, ()

    moved = [p for p in state.active if p.id in cached]
    state = attr.evolve(
        state,
        posterior=post,
        active=tuple(p for p in state.active if p.id not in cached),
        cache=tuple(sorted(state.cache + tuple(moved), key=lambda p: p.id)),
    )
    return _refit(state, config), tuple(cached)


def recall_points(
    state: LearnerState, ids, config: EngineConfig
) -> Tuple[LearnerState, Tuple[int, ...]]:
    """
    Moves cached points back to the active set, adding them one after the
    other in ascending id order with their stored labels.

    The added sites are projected against the current posterior. When that
    posterior is an EP fixed point (always the case with `refit_ep`),
    forgetting a point and recalling it restores the posterior.

    :param LearnerState state:
    :param iterable[int] ids: Ids of cached points.
    :param EngineConfig config:
    :rtype: tuple[LearnerState,tuple[int]]
    :return: The new state and the ids recalled.
    """
    moved = [state.find_cached(id) for id in sorted(ids)]
    if not moved:
        return state, ()

    post = state.posterior
    for point in moved:
        post = adf_update(post, point)
    recalled = tuple(p.id for p in moved)
    state = attr.evolve(
        state,
        posterior=post,
        active=tuple(sorted(state.active + tuple(moved), key=lambda p: p.id)),
        cache=tuple(p for p in state.cache if p.id not in recalled),
    )
    return _refit(state, config), recalled


def recall_cycle(
    state: LearnerState, config: EngineConfig
) -> Tuple[LearnerState, Dict[int, float], Tuple[int, ...]]:
    """
    Computes the VOR of every cached point on the current posterior and moves
    all points with positive value back to the active set, adding them in
    ascending id order.

    :rtype: tuple[LearnerState,dict[int,float],tuple[int]]
    :return: The new state, the VOR of every cached point and the ids
        recalled.
    """
    if not state.cache or not state.buffer:
        return state, {}, ()

    post = state.posterior
    current = buffer_risk(post, state.buffer, config.risk)
    vor_values = {
        point.id: _value_of_recalling(post, point, state.buffer, config.risk, current)
        for point in state.cache
    }

    state, recalled = recall_points(
        state, [id for id, value in vor_values.items() if value > 0.0], config
    )
    if recalled:
        logger.info("Step %s: recalled points %s", state.step, list(recalled))
    return state, vor_values, recalled


def _check_state(before, after, probed_id, config):
    if not is_voicache_debug_enabled():
        return

    active_ids = set(after.active_ids())
    cached_ids = set(after.cached_ids())
    if active_ids & cached_ids:
        raise InvariantViolation(
            "Points {} are both active and cached".format(sorted(active_ids & cached_ids))
        )
    if set(after.posterior.sites) != active_ids:
        raise InvariantViolation(
            "Sites {} don't match active points {}".format(
                sorted(after.posterior.sites), sorted(active_ids)
            )
        )
    expected = set(before.active_ids()) | set(before.cached_ids())
    if probed_id is not None:
        expected.add(probed_id)
    if active_ids | cached_ids != expected:
        raise InvariantViolation(
            "Labeled points changed from {} to {}".format(
                sorted(expected), sorted(active_ids | cached_ids)
            )
        )
    if len(after.buffer) > config.s_buffer:
        raise InvariantViolation("Buffer holds {} points".format(len(after.buffer)))


def step(
    state: LearnerState,
    x,
    oracle: LabelOracle,
    config: EngineConfig,
    *,
    decide_probe=None,
    cache_and_recall=True,
) -> Tuple[LearnerState, DecisionRecord]:
    """
    Processes one point of the stream: buffer it, then run the seek, cache
    and recall cycles.

    :param LearnerState state:
    :param x: Features of the new point (bias augmented).
    :param LabelOracle oracle: Asked only when the point is probed.
    :param EngineConfig config:
    :param callable|None decide_probe: See :func:`seek_cycle`.
    :param bool cache_and_recall: When false only the seek cycle runs, as
        for probe-only policies.
    :rtype: tuple[LearnerState,DecisionRecord]
    """
    before = state
    point_id = state.step
    state = observe(state, x, config)
    state, outcome = seek_cycle(state, x, oracle, config, decide_probe=decide_probe)

    vof_values: Dict[int, float] = {}
    cached_ids: Tuple[int, ...] = ()
    vor_values: Dict[int, float] = {}
    recalled_ids: Tuple[int, ...] = ()
    if cache_and_recall:
        state, vof_values, cached_ids = cache_cycle(state, config)
        state, vor_values, recalled_ids = recall_cycle(state, config)

    state = attr.evolve(state, step=point_id + 1)
    _check_state(before, state, point_id if outcome.probed else None, config)

    record = DecisionRecord(
        step=point_id,
        point_id=point_id,
        vop=outcome.decision.vop,
        decision=outcome.decision,
        probed=outcome.probed,
        probe_label=outcome.label,
        probe_cost_incurred=outcome.cost,
        vof_values=vof_values,
        cached_ids=cached_ids,
        vor_values=vor_values,
        recalled_ids=recalled_ids,
    )
    return state, record
