"""
Prequential experiments: every point of a stream is first classified with the
learner trained on the points before it, then handed to the learner, which may
probe for its label.

Costs follow the ledger below:

- a probed point is charged its actual label-dependent probe price and is
  left out of accuracy and misclassification scoring;
- any other point is charged `r12` when a true `+1` was predicted `-1`, `r21`
  when a true `-1` was predicted `+1`, and nothing when predicted correctly.
"""

import concurrent.futures
import csv
import logging
import os
from typing import Callable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import attr
from oop_ext.foundation.callback import Callback

from voicache import constants
from voicache.bayes_linear_gp import point_classify
from voicache.configuration import ExperimentOptions
from voicache.exceptions import OutputError
from voicache.exceptions import UnknownPolicy
from voicache.policies import create_policy
from voicache.policies import run_policy_step
from voicache.stream_data import augment_bias
from voicache.stream_data import StreamPoint
from voicache.voi_engine import EngineConfig
from voicache.voi_engine import initial_state
from voicache.voi_engine import ReplayOracle


logger = logging.getLogger(__name__)


@attr.s(frozen=True, slots=True)
class StepRecord:
    """
    One row of the cost curve. Field order is the column order of
    `steps.csv`.
    """

    step: int = attr.ib()
    probed: bool = attr.ib()
    predicted: int = attr.ib()
    true_label: int = attr.ib()
    probe_cost_incurred: float = attr.ib()
    misclass_cost_incurred: float = attr.ib()
    cumulative_cost: float = attr.ib()
    active_size: int = attr.ib()
    cache_size: int = attr.ib()
    cached_ids: Tuple[int, ...] = attr.ib(default=(), converter=tuple)
    recalled_ids: Tuple[int, ...] = attr.ib(default=(), converter=tuple)

    def as_row(self):
        row = []
        for value in attr.astuple(self, recurse=False):
            if isinstance(value, tuple):
                # Lists share one field, ids separated by spaces.
                value = " ".join(str(v) for v in value)
            row.append(value)
        return row


@attr.s(frozen=True, slots=True)
class RunSummary:
    """
    :ivar str policy:
    :ivar int probes: Number of probed points.
    :ivar float total_cost: Probe plus misclassification costs.
    :ivar float accuracy: Fraction of non-probed points predicted correctly.
    :ivar int seed:
    :ivar int n_points: Stream length.
    :ivar bool accuracy_undefined: Every point was probed, `accuracy` is
        reported as 1.0.
    """

    policy: str = attr.ib()
    probes: int = attr.ib()
    total_cost: float = attr.ib()
    accuracy: float = attr.ib()
    seed: int = attr.ib()
    n_points: int = attr.ib()
    accuracy_undefined: bool = attr.ib(default=False)


SUMMARY_COLUMNS = ("policy", "probes", "total_cost", "accuracy", "seed", "accuracy_undefined")


class ExperimentEvents:
    """
    Callbacks fired while a run progresses.

    :ivar Callback on_step: Called with each `StepRecord`.
    :ivar Callback on_points_cached: Called with `(step, cached_ids)` when the
        learner moves points to its cache.
    :ivar Callback on_points_recalled: Called with `(step, recalled_ids)` when
        cached points return to the active set.

    .. code-block::

        events = ExperimentEvents()
        events.on_points_cached.Register(lambda step, ids: print(step, ids))
        run_experiment(stream, "voi_full", config, seed=0, events=events)
    """

    def __init__(self):
        self.on_step = Callback()
        self.on_points_cached = Callback()
        self.on_points_recalled = Callback()


def run_experiment(
    stream: Sequence[StreamPoint],
    policy: str,
    config: EngineConfig,
    seed: int,
    *,
    random_p: float = 0.05,
    events: Optional[ExperimentEvents] = None,
) -> Tuple[RunSummary, List[StepRecord]]:
    """
    Runs one policy over a stream.

    :param sequence[StreamPoint] stream: Raw points; the bias coordinate is
        added here.
    :param str policy: One of `constants.POLICY_NAMES`.
    :param EngineConfig config:
    :param int seed: Seeds the policy's own random draws.
    :param float random_p: Probe probability of the `random` policy.
    :param ExperimentEvents|None events:
    :rtype: tuple[RunSummary,list[StepRecord]]
    """
    if not stream:
        raise ValueError("Can't run an experiment on an empty stream")
    if policy not in constants.POLICY_NAMES:
        raise UnknownPolicy(
            "Unknown policy {!r}, expected one of: {}".format(
                policy, ", ".join(constants.POLICY_NAMES)
            )
        )

    learner = create_policy(policy, seed=seed, random_p=random_p)
    oracle = ReplayOracle.from_stream(stream)
    features = [augment_bias(point.features) for point in stream]
    state = initial_state(len(features[0]))

    records = []
    cumulative = 0.0
    probes = 0
    correct = 0
    for point, x in zip(stream, features):
        predicted = point_classify(state.posterior, x)
        state, decision = run_policy_step(learner, state, x, oracle, config)

        misclass_cost = 0.0
        if decision.probed:
            probes += 1
        elif predicted == point.true_label:
            correct += 1
        elif point.true_label == constants.POSITIVE_LABEL:
            misclass_cost = config.risk.r12
        else:
            misclass_cost = config.risk.r21
        cumulative += decision.probe_cost_incurred + misclass_cost

        record = StepRecord(
            step=point.index,
            probed=decision.probed,
            predicted=predicted,
            true_label=point.true_label,
            probe_cost_incurred=decision.probe_cost_incurred,
            misclass_cost_incurred=misclass_cost,
            cumulative_cost=cumulative,
            active_size=len(state.active),
            cache_size=len(state.cache),
            cached_ids=decision.cached_ids,
            recalled_ids=decision.recalled_ids,
        )
        records.append(record)
        if events is not None:
            events.on_step(record)
            if decision.cached_ids:
                events.on_points_cached(point.index, decision.cached_ids)
            if decision.recalled_ids:
                events.on_points_recalled(point.index, decision.recalled_ids)

    scored = len(stream) - probes
    summary = RunSummary(
        policy=policy,
        probes=probes,
        total_cost=sum(r.probe_cost_incurred for r in records)
        + sum(r.misclass_cost_incurred for r in records),
        accuracy=correct / scored if scored else 1.0,
        seed=seed,
        n_points=len(stream),
        accuracy_undefined=scored == 0,
    )
    logger.info(
        "%s (seed %s): %s probes, cost %s, accuracy %.4f",
        policy,
        seed,
        summary.probes,
        summary.total_cost,
        summary.accuracy,
    )
    return summary, records


def _run_one(stream_factory, policy, seed, options):
    stream = stream_factory(seed)
    config = options.engine_config(len(stream))
    return run_experiment(stream, policy, config, seed, random_p=options.random_p)


def sweep(
    stream_factory: Callable[[int], Sequence[StreamPoint]],
    policies: Sequence[str],
    seeds: Sequence[int],
    options: ExperimentOptions,
    jobs: int = 1,
) -> List[Tuple[RunSummary, List[StepRecord]]]:
    """
    Runs every policy on the stream of every seed.

    :param callable stream_factory: `stream_factory(seed)` returning the
        stream for a seed. Must be picklable when `jobs > 1`.
    :param sequence[str] policies:
    :param sequence[int] seeds:
    :param ExperimentOptions options:
    :param int jobs: Runs are spread over this many processes when above 1.
    :rtype: list[tuple[RunSummary,list[StepRecord]]]
    :return: Results in seed-major, then policy order, whatever `jobs` is.
    """
    for policy in policies:
        if policy not in constants.POLICY_NAMES:
            raise UnknownPolicy(
                "Unknown policy {!r}, expected one of: {}".format(
                    policy, ", ".join(constants.POLICY_NAMES)
                )
            )

    grid = [(policy, seed) for seed in seeds for policy in policies]
    if jobs <= 1:
        return [_run_one(stream_factory, policy, seed, options) for policy, seed in grid]

    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        futures = [
            executor.submit(_run_one, stream_factory, policy, seed, options)
            for policy, seed in grid
        ]
        return [future.result() for future in futures]


def emit_outputs(
    summary: RunSummary,
    records: Sequence[StepRecord],
    out_dir,
    run_name: Optional[str] = None,
) -> List[str]:
    """
    Writes the per-step records (replacing a previous file) and appends the
    summary row to `summary.csv`.

    :param RunSummary summary:
    :param sequence[StepRecord] records:
    :param str out_dir: Created when missing.
    :param str|None run_name: Steps go to `steps_<run_name>.csv` instead of
        `steps.csv`, so several runs can share a directory.
    :rtype: list[str]
    :return: Paths written.
    """
    if run_name is None:
        steps_filename = constants.STEPS_FILENAME
    else:
        steps_filename = "steps_{}.csv".format(run_name)
    steps_path = os.path.join(out_dir, steps_filename)
    summary_path = os.path.join(out_dir, constants.SUMMARY_FILENAME)

    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(steps_path, "w", newline="", encoding="utf-8") as steps_file:
            writer = csv.writer(steps_file, lineterminator="\n")
            writer.writerow([f.name for f in attr.fields(StepRecord)])
            for record in records:
                writer.writerow(record.as_row())

        write_header = not os.path.exists(summary_path)
        with open(summary_path, "a", newline="", encoding="utf-8") as summary_file:
            writer = csv.writer(summary_file, lineterminator="\n")
            if write_header:
                writer.writerow(SUMMARY_COLUMNS)
            writer.writerow([getattr(summary, name) for name in SUMMARY_COLUMNS])
    except OSError as e:
        raise OutputError("Unable to write outputs to {}: {}".format(out_dir, e))

    return [steps_path, summary_path]

