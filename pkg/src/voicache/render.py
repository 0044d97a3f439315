import attr
import numpy as np


@attr.s(frozen=True, slots=True)
class ComparisonRow:
    """
    Medians of one policy's runs over every seed.
    """

    policy = attr.ib()
    probes = attr.ib()
    total_cost = attr.ib()
    accuracy = attr.ib()
    accuracy_undefined = attr.ib()


def comparison_rows(summaries):
    """
    :param iterable[RunSummary] summaries: Runs of one or more policies,
        possibly with several seeds each.
    :rtype: list[ComparisonRow]
    :return: One row per policy, in the order policies first appear.
    """
    by_policy = {}
    for summary in summaries:
        by_policy.setdefault(summary.policy, []).append(summary)

    rows = []
    for policy, runs in by_policy.items():
        probes = float(np.median([run.probes for run in runs]))
        rows.append(
            ComparisonRow(
                policy=policy,
                probes=int(probes) if probes.is_integer() else probes,
                total_cost=float(np.median([run.total_cost for run in runs])),
                accuracy=float(np.median([run.accuracy for run in runs])),
                accuracy_undefined=all(run.accuracy_undefined for run in runs),
            )
        )
    return rows


def render_comparison_table(summaries, title="Comparison"):
    """
    Renders the "METHOD PROBES COST ACCURACY" table comparing policies.

    :param iterable[RunSummary] summaries:
    :param str title: First line of the table.
    :rtype: str
    """
    from jinja2 import PackageLoader
    from jinja2.environment import Environment

    summaries = list(summaries)
    env = Environment(loader=PackageLoader("voicache", "templates"))
    template = env.get_template("comparison_table.txt")
    return template.render(
        title=title,
        rows=comparison_rows(summaries),
        n_seeds=len({summary.seed for summary in summaries}),
    )
