"""
Command line entry point (`voicache`), built as an invoke program:

    voicache run --dataset cluster --policy voi_full --seed 3 --out results
    voicache sweep --policies voi_full,random --repeats 20 --out results --jobs 4
    voicache generate --out stream.csv --seed 3
"""

import contextlib
import functools
import logging
import os
import sys

import attr
import invoke
from colorama import Fore
from colorama import Style

from voicache import constants
from voicache import experiment_harness
from voicache.configuration import load_experiment_options
from voicache.configuration import PRESET_ASYMMETRIC
from voicache.configuration import PRESET_SYMMETRIC
from voicache.exceptions import InvalidConfig
from voicache.exceptions import OutputError
from voicache.exceptions import VoiCacheError
from voicache.render import render_comparison_table
from voicache.stream_data import generate_cluster_stream
from voicache.stream_data import load_csv_stream
from voicache.stream_data import write_csv_stream


logger = logging.getLogger(__name__)

_CLUSTER_DATASET = "cluster"
_CSV_DATASET_PREFIX = "csv:"

_DATASET_HELP = "'cluster' for the synthetic stream or 'csv:PATH' for a stream file"
_SEED_HELP = "Seeds the cluster generator and the random policy (default: cluster.seed)"
_CONFIG_HELP = "JSON file with experiment options"


def print_message(message, color=None, bright=True, endline="\n"):
    """
    Print a message to the standard output.

    :param str message: The message to print.
    :param str|None color: The ANSI color used to colorize the message
        (see `colorama.Fore`). When `None` the message is printed as is.
        Defaults to `None`.
    :param bool bright: Control if the output message is bright or dim. This
        value is ignored if `color is None`. Default to `True`.
    :param str endline: The character printed after `message`. Default to
        "new line character".
    """
    if color is not None:
        style = Style.BRIGHT if bright else Style.DIM
        message = "{color}{style}{msg}{reset}".format(
            color=color,
            style=style,
            reset=Style.RESET_ALL,
            msg=message,
        )

    # Log records go to stderr, flush both so they interleave in order.
    sys.stdout.flush()
    sys.stderr.flush()
    print(message, end=endline)
    sys.stdout.flush()
    sys.stderr.flush()


def _configure_logging(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@contextlib.contextmanager
def _reported_errors():
    try:
        yield
    except VoiCacheError as e:
        raise invoke.Exit("voicache: error: {}".format(e), code=1)


def _dataset_preset(dataset):
    if dataset == _CLUSTER_DATASET:
        return PRESET_SYMMETRIC
    if dataset.startswith(_CSV_DATASET_PREFIX):
        return PRESET_ASYMMETRIC
    raise InvalidConfig(
        "Unknown dataset {!r}, expected 'cluster' or 'csv:PATH'".format(dataset)
    )


def _cluster_stream(cluster_config, seed):
    return generate_cluster_stream(attr.evolve(cluster_config, seed=seed))


def _recorded_stream(points, seed):
    return points


def _parse_seed(seed, options):
    if seed is None:
        return options.cluster.seed
    try:
        return int(seed)
    except ValueError:
        raise InvalidConfig("Seed must be an integer but got {!r}".format(seed))


def _prepare(dataset, config):
    """
    :rtype: tuple[ExperimentOptions,callable]
    :return: The options and a `stream_factory(seed)` for the dataset.
    """
    options = load_experiment_options(config, default_preset=_dataset_preset(dataset))
    if dataset == _CLUSTER_DATASET:
        return options, functools.partial(_cluster_stream, options.cluster)

    points = load_csv_stream(dataset[len(_CSV_DATASET_PREFIX) :])
    if not points:
        raise InvalidConfig("Stream {} has no points".format(dataset))
    return options, functools.partial(_recorded_stream, points)


def _print_event(kind, color, step, ids):
    print_message("  step {}: {} {}".format(step, kind, ", ".join(str(i) for i in ids)), color=color)


@invoke.task(
    help={
        "dataset": _DATASET_HELP,
        "policy": "One of: {}".format(", ".join(constants.POLICY_NAMES)),
        "seed": _SEED_HELP,
        "out": "Directory receiving steps.csv and summary.csv",
        "config": _CONFIG_HELP,
        "verbose": "Log every value of information computed",
    }
)
def run(
    ctx,
    dataset=_CLUSTER_DATASET,
    policy=constants.POLICY_VOI_FULL,
    seed=None,
    out="results",
    config=None,
    verbose=False,
):
    """
    Runs one policy over a stream and writes its cost curve and summary.
    """
    _configure_logging(verbose)
    with _reported_errors():
        options, stream_factory = _prepare(dataset, config)
        seed = _parse_seed(seed, options)
        stream = stream_factory(seed)

        events = experiment_harness.ExperimentEvents()
        events.on_points_cached.Register(functools.partial(_print_event, "cached", Fore.YELLOW))
        events.on_points_recalled.Register(functools.partial(_print_event, "recalled", Fore.GREEN))

        print_message("run {} on {} (seed {})".format(policy, dataset, seed), color=Fore.BLUE)
        summary, records = experiment_harness.run_experiment(
            stream,
            policy,
            options.engine_config(len(stream)),
            seed,
            random_p=options.random_p,
            events=events,
        )
        for path in experiment_harness.emit_outputs(summary, records, out):
            print_message("  * wrote {}".format(path))
        print_message(render_comparison_table([summary], title=dataset))


@invoke.task(
    help={
        "policies": "Comma separated policy names",
        "dataset": _DATASET_HELP,
        "seed": "First seed; repeats use consecutive seeds (default: cluster.seed)",
        "repeats": "Number of seeds",
        "out": "Directory receiving per-run steps, summary.csv and comparison.txt",
        "config": _CONFIG_HELP,
        "jobs": "Number of worker processes",
        "verbose": "Log every value of information computed",
    }
)
def sweep(
    ctx,
    policies=",".join(constants.POLICY_NAMES),
    dataset=_CLUSTER_DATASET,
    seed=None,
    repeats=1,
    out="results",
    config=None,
    jobs=1,
    verbose=False,
):
    """
    Runs several policies over several seeds and prints the comparison table.
    """
    _configure_logging(verbose)
    with _reported_errors():
        names = [name.strip() for name in policies.split(",") if name.strip()]
        if not names:
            raise InvalidConfig("No policy given")
        if repeats < 1:
            raise InvalidConfig("Repeats must be at least 1 but got {}".format(repeats))
        options, stream_factory = _prepare(dataset, config)
        first_seed = _parse_seed(seed, options)
        seeds = list(range(first_seed, first_seed + repeats))

        print_message(
            "sweep {} on {} ({} seed(s))".format(", ".join(names), dataset, repeats),
            color=Fore.BLUE,
        )
        results = experiment_harness.sweep(stream_factory, names, seeds, options, jobs=jobs)
        for summary, records in results:
            experiment_harness.emit_outputs(
                summary,
                records,
                out,
                run_name="{}_seed{}".format(summary.policy, summary.seed),
            )

        table = render_comparison_table([summary for summary, _ in results], title=dataset)
        comparison_path = os.path.join(out, constants.COMPARISON_FILENAME)
        try:
            with open(comparison_path, "w", encoding="utf-8") as comparison_file:
                comparison_file.write(table + "\n")
        except OSError as e:
            raise OutputError("Unable to write {}: {}".format(comparison_path, e))
        print_message(table)


@invoke.task(
    help={
        "out": "CSV file to write",
        "seed": "Generator seed (default: cluster.seed)",
        "config": _CONFIG_HELP,
        "verbose": "Log debug messages",
    }
)
def generate(ctx, out, seed=None, config=None, verbose=False):
    """
    Writes the synthetic cluster stream as a CSV stream file.
    """
    _configure_logging(verbose)
    with _reported_errors():
        options = load_experiment_options(config, default_preset=PRESET_SYMMETRIC)
        seed = _parse_seed(seed, options)
        points = _cluster_stream(options.cluster, seed)
        logger.debug("Generated %s points with seed %s", len(points), seed)
        write_csv_stream(points, out, dim=2)
        print_message("wrote {} points to {}".format(len(points), out), color=Fore.BLUE)


program = invoke.Program(
    namespace=invoke.Collection(run, sweep, generate),
    name="voicache",
    binary="voicache",
)
