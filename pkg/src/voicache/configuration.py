import json

import attr

from voicache import constants
from voicache.exceptions import InvalidConfig
from voicache.extra_attr_validators import probability
from voicache.risk_model import ProbeCosts
from voicache.risk_model import RiskMatrix
from voicache.stream_data import ClusterStreamConfig
from voicache.voi_engine import EngineConfig


SYMMETRIC_RISK = RiskMatrix(r12=1.0, r21=1.0)
ASYMMETRIC_RISK = RiskMatrix(r12=2.0, r21=1.0)
UNIT_PROBE_COSTS = ProbeCosts(cost_pos=1.0, cost_neg=1.0)
ASYMMETRIC_PROBE_COSTS = ProbeCosts(cost_pos=2.0, cost_neg=1.0)

_is_bool = attr.validators.instance_of(bool)


def _is_horizon(inst, attr, value):
    """
    The description of `inst`, `attrs`, and `value` comes from:
    http://www.attrs.org/en/stable/examples.html#decorator

    :param inst: The *instance* that’s being validated.
    :param attr: the *attribute* that it’s validating.
    :param value: The value that is passed for it.
    :raise ValueError: If the validation fails.
    """
    if value == constants.STREAM_LENGTH_HORIZON:
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        msg = "{} must be a positive number or {!r} but got {!r}"
        raise ValueError(msg.format(attr.name, constants.STREAM_LENGTH_HORIZON, value))


def _is_buffer_size(inst, attr, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        msg = "{} must be a positive integer but got {!r}"
        raise ValueError(msg.format(attr.name, value))


@attr.s(frozen=True, slots=True)
class ExperimentOptions(object):
    """
    Every knob of an experiment run.

    :ivar int s_buffer: Context buffer capacity.
    :ivar float|str k_horiz: Optimization horizon, or `"stream_len"` to use
        the length of the stream being run.
    :ivar RiskMatrix risk: Misclassification costs.
    :ivar ProbeCosts probe_costs: Label-dependent probe prices.
    :ivar float random_p: Probe probability of the `random` policy.
    :ivar bool refit_ep: See :class:`voicache.voi_engine.EngineConfig`.
    :ivar bool inclusive_thresholds: See
        :class:`voicache.voi_engine.EngineConfig`.
    :ivar ClusterStreamConfig cluster: Generator of the synthetic stream.
    """

    s_buffer = attr.ib(default=5, validator=_is_buffer_size)
    k_horiz = attr.ib(default=constants.STREAM_LENGTH_HORIZON, validator=_is_horizon)
    risk = attr.ib(default=SYMMETRIC_RISK, validator=attr.validators.instance_of(RiskMatrix))
    probe_costs = attr.ib(
        default=UNIT_PROBE_COSTS, validator=attr.validators.instance_of(ProbeCosts)
    )
    random_p = attr.ib(default=0.05, validator=probability)
    refit_ep = attr.ib(default=False, validator=_is_bool)
    inclusive_thresholds = attr.ib(default=False, validator=_is_bool)
    cluster = attr.ib(
        factory=ClusterStreamConfig,
        validator=attr.validators.instance_of(ClusterStreamConfig),
    )

    def engine_config(self, stream_len):
        """
        :param int stream_len: Length of the stream about to be run, used
            when the horizon follows the stream length.
        :rtype: EngineConfig
        """
        k_horiz = self.k_horiz
        if k_horiz == constants.STREAM_LENGTH_HORIZON:
            k_horiz = stream_len
        if not k_horiz > 0:
            raise InvalidConfig("Optimization horizon must be positive but got {}".format(k_horiz))
        return EngineConfig(
            s_buffer=self.s_buffer,
            k_horiz=float(k_horiz),
            risk=self.risk,
            probe_costs=self.probe_costs,
            refit_ep=self.refit_ep,
            inclusive_thresholds=self.inclusive_thresholds,
        )

    def as_dict(self):
        """
        :rtype: dict
        :return: Flat mapping with the keys accepted by
            :func:`options_from_mapping`.
        """
        values = {
            "s_buffer": self.s_buffer,
            "k_horiz": self.k_horiz,
            "r12": self.risk.r12,
            "r21": self.risk.r21,
            "probe_cost_pos": self.probe_costs.cost_pos,
            "probe_cost_neg": self.probe_costs.cost_neg,
            "random_p": self.random_p,
            "refit_ep": self.refit_ep,
            "inclusive_thresholds": self.inclusive_thresholds,
        }
        for name, value in attr.asdict(self.cluster, recurse=False).items():
            values[_CLUSTER_PREFIX + name] = value
        return values


PRESET_SYMMETRIC = "symmetric"
PRESET_ASYMMETRIC = "asymmetric"

PRESETS = {
    PRESET_SYMMETRIC: ExperimentOptions(),
    PRESET_ASYMMETRIC: ExperimentOptions(risk=ASYMMETRIC_RISK, probe_costs=ASYMMETRIC_PROBE_COSTS),
}
"""
`symmetric` is the cost setting of the cluster stream (unit losses and unit
probe price), `asymmetric` the one for external streams (a missed `+1` costs 2,
a probe answered `+1` costs 2).
"""

_CLUSTER_PREFIX = "cluster."
_TOP_LEVEL_KEYS = {
    "preset",
    "s_buffer",
    "k_horiz",
    "r12",
    "r21",
    "probe_cost_pos",
    "probe_cost_neg",
    "random_p",
    "refit_ep",
    "inclusive_thresholds",
}
_CLUSTER_KEYS = {_CLUSTER_PREFIX + f.name for f in attr.fields(ClusterStreamConfig)}


def preset_options(name):
    """
    :param str name: `symmetric` or `asymmetric`.
    :rtype: ExperimentOptions
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidConfig(
            "Unknown preset {!r}, expected one of: {}".format(name, ", ".join(sorted(PRESETS)))
        )


def options_from_mapping(values, default_preset=PRESET_SYMMETRIC):
    """
    Overlays a flat mapping of settings on a preset.

    :param dict values: Keys as in the config file; `preset` picks the base
        options, otherwise `default_preset` is used.
    :param str default_preset:
    :rtype: ExperimentOptions
    :raise InvalidConfig: On unknown keys (all reported at once) or invalid
        values.
    """
    unknown = sorted(set(values) - _TOP_LEVEL_KEYS - _CLUSTER_KEYS)
    if unknown:
        raise InvalidConfig("Invalid keys in config: {}".format(", ".join(unknown)))

    base = preset_options(values.get("preset", default_preset))
    try:
        risk = RiskMatrix(
            r12=values.get("r12", base.risk.r12),
            r21=values.get("r21", base.risk.r21),
        )
        probe_costs = ProbeCosts(
            cost_pos=values.get("probe_cost_pos", base.probe_costs.cost_pos),
            cost_neg=values.get("probe_cost_neg", base.probe_costs.cost_neg),
        )
        cluster_changes = {
            key[len(_CLUSTER_PREFIX) :]: value
            for key, value in values.items()
            if key.startswith(_CLUSTER_PREFIX)
        }
        return attr.evolve(
            base,
            s_buffer=values.get("s_buffer", base.s_buffer),
            k_horiz=values.get("k_horiz", base.k_horiz),
            risk=risk,
            probe_costs=probe_costs,
            random_p=values.get("random_p", base.random_p),
            refit_ep=values.get("refit_ep", base.refit_ep),
            inclusive_thresholds=values.get("inclusive_thresholds", base.inclusive_thresholds),
            cluster=attr.evolve(base.cluster, **cluster_changes),
        )
    except (TypeError, ValueError) as e:
        raise InvalidConfig(str(e))


def load_experiment_options(path, default_preset=PRESET_SYMMETRIC):
    """
    Reads options from a JSON file holding one flat object, such as::

        {"preset": "asymmetric", "s_buffer": 8, "cluster.std_dev": 0.5}

    :param str|None path: When `None` the default preset is returned as is.
    :param str default_preset: Used when the file doesn't name a preset.
    :rtype: ExperimentOptions
    """
    if path is None:
        return preset_options(default_preset)

    try:
        with open(path, encoding="utf-8") as config_file:
            values = json.load(config_file)
    except OSError as e:
        raise InvalidConfig("Unable to read config {}: {}".format(path, e))
    except ValueError as e:
        raise InvalidConfig("Config {} is not valid JSON: {}".format(path, e))

    if not isinstance(values, dict):
        raise InvalidConfig("Config {} must hold a JSON object".format(path))
    return options_from_mapping(values, default_preset)
