import numpy as np
import pytest


@pytest.fixture(autouse=True)
def enable_voicache_debug():
    """
    During tests it is healthy to have this enable to fail as early as possible
    and have as much information as possible about errors.
    """
    import voicache.debug

    voicache.debug.set_voicache_debug(True)
    yield
    voicache.debug.set_voicache_debug(False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def symmetric_config():
    from voicache.configuration import SYMMETRIC_RISK
    from voicache.configuration import UNIT_PROBE_COSTS
    from voicache.voi_engine import EngineConfig

    return EngineConfig(
        s_buffer=5, k_horiz=100.0, risk=SYMMETRIC_RISK, probe_costs=UNIT_PROBE_COSTS
    )


@pytest.fixture
def data_dir(request):
    import os

    return os.path.join(os.path.dirname(request.fspath), "data")


@pytest.fixture
def csv_stream(data_dir):
    """
    The committed stream file, read with the asymmetric cost setting in mind.
    """
    import os

    from voicache.stream_data import load_csv_stream

    return load_csv_stream(os.path.join(data_dir, "asymmetric_stream.csv"))


@pytest.fixture
def csv_points(csv_stream):
    from voicache.bayes_linear_gp import LabeledPoint
    from voicache.stream_data import augment_bias

    return [LabeledPoint(p.index, augment_bias(p.features), p.true_label) for p in csv_stream]


@pytest.fixture
def asymmetric_config(csv_stream):
    from voicache.configuration import preset_options

    return preset_options("asymmetric").engine_config(len(csv_stream))
