import numpy as np
import pytest

from voicache import constants
from voicache.bayes_linear_gp import Posterior
from voicache.bayes_linear_gp import prior_posterior
from voicache.exceptions import UnknownPolicy
from voicache.policies import create_policy
from voicache.policies import PolicyDecision
from voicache.policies import ProbeReason
from voicache.policies import random_policy
from voicache.policies import run_policy_step
from voicache.policies import uncertainty_policy
from voicache.policies import vop_only_policy
from voicache.stream_data import augment_bias
from voicache.stream_data import ClusterStreamConfig
from voicache.stream_data import generate_cluster_stream
from voicache.voi_engine import compute_vop
from voicache.voi_engine import initial_state
from voicache.voi_engine import observe
from voicache.voi_engine import ReplayOracle


def test_random_policy_degenerate_probabilities(rng) -> None:
    x = np.array([1.0, 0.0])
    assert not any(random_policy(0.0, rng, x).probe for _ in range(1000))
    assert all(random_policy(1.0, rng, x).probe for _ in range(1000))

    decision = random_policy(1.0, rng, x)
    assert decision.reason is ProbeReason.RANDOM_DRAW
    assert decision.vop is None

    with pytest.raises(ValueError):
        random_policy(1.5, rng, x)


def test_random_policy_rate() -> None:
    rng = np.random.default_rng(7)
    x = np.array([1.0, 0.0])
    probes = sum(random_policy(0.1, rng, x).probe for _ in range(10000))
    assert 900 <= probes <= 1100


def test_random_policy_draws_once_per_call() -> None:
    first = np.random.default_rng(3)
    second = np.random.default_rng(3)
    x = np.array([1.0])
    for _ in range(10):
        random_policy(0.0, first, x)
        random_policy(1.0, second, x)
    assert first.random() == second.random()


def test_uncertainty_policy_band() -> None:
    # With `cov = 0` the predictive probability of x is Ψ(w̄ᵀx).
    post = Posterior(mean=[1.0], cov=[[0.0]])
    assert uncertainty_policy(post, [0.0]).probe
    assert uncertainty_policy(post, [0.0]).reason is ProbeReason.UNCERTAINTY_BAND
    # Ψ(0.5) ≈ 0.69 and Ψ(0.55) ≈ 0.71.
    assert uncertainty_policy(post, [0.5]).probe
    assert not uncertainty_policy(post, [0.55]).probe
    assert uncertainty_policy(post, [-0.5]).probe
    assert not uncertainty_policy(post, [-0.55]).probe

    assert not uncertainty_policy(post, [3.0]).probe
    assert uncertainty_policy(post, [3.0]).reason is ProbeReason.NEVER
    assert uncertainty_policy(prior_posterior(2), [5.0, -2.0]).probe


def test_uncertainty_policy_closed_band() -> None:
    post = prior_posterior(1)
    # The prior predicts exactly 0.5 everywhere.
    assert uncertainty_policy(post, [1.0], band=(0.5, 0.5)).probe
    assert not uncertainty_policy(post, [1.0], band=(0.6, 0.7)).probe


def test_vop_only_policy(symmetric_config) -> None:
    x = np.array([1.0, 0.0])
    state = observe(initial_state(2), x, symmetric_config)
    decision = vop_only_policy(state, x, symmetric_config)
    assert decision.vop == compute_vop(state, x, symmetric_config)
    assert decision.probe == (decision.vop > 0.0)
    assert decision.reason is ProbeReason.VOP_POSITIVE


def test_policy_decision_consistency() -> None:
    with pytest.raises(ValueError):
        PolicyDecision(True, ProbeReason.NEVER)
    with pytest.raises(ValueError):
        PolicyDecision(False, ProbeReason.VOP_POSITIVE)
    assert PolicyDecision(False, ProbeReason.NEVER, vop=-2.0).vop == -2.0


def test_create_policy() -> None:
    for name in constants.POLICY_NAMES:
        policy = create_policy(name)
        assert policy.name == name
        assert policy.forgets == (name == constants.POLICY_VOI_FULL)

    with pytest.raises(UnknownPolicy, match="Unknown policy 'greedy'"):
        create_policy("greedy")
    with pytest.raises(ValueError):
        create_policy(constants.POLICY_RANDOM, random_p=-0.1)


def test_random_policy_is_seeded(symmetric_config) -> None:
    x = np.array([1.0, 0.0])
    state = observe(initial_state(2), x, symmetric_config)

    def decisions(seed):
        policy = create_policy(constants.POLICY_RANDOM, seed=seed, random_p=0.5)
        return [policy.decide(state, x, symmetric_config).probe for _ in range(50)]

    assert decisions(11) == decisions(11)
    assert decisions(11) != decisions(12)


def test_probe_only_policies_never_cache(symmetric_config) -> None:
    stream = generate_cluster_stream(ClusterStreamConfig(total_points=40, seed=2))
    oracle = ReplayOracle.from_stream(stream)

    for name in (constants.POLICY_VOP_ONLY, constants.POLICY_RANDOM, constants.POLICY_UNCERTAIN):
        policy = create_policy(name, seed=1, random_p=0.3)
        state = initial_state(3)
        probed = []
        for point in stream:
            state, record = run_policy_step(
                policy, state, augment_bias(point.features), oracle, symmetric_config
            )
            assert record.cached_ids == () and record.recalled_ids == ()
            assert record.vof_values == {} and record.vor_values == {}
            if record.probed:
                probed.append(point.index)
        assert state.cache == ()
        assert state.active_ids() == tuple(probed)
