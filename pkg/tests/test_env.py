import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covsem.agents.training import audit_episode, random_action
from covsem.env import IDLE, ActionCommand, AttackerSpec, EpisodeConfig
from covsem.errors import ConfigError, ContractViolation

from .conftest import make_env


def run_random(env, seed, act_seed=0):
    rng = np.random.default_rng(act_seed)
    env.reset(seed)
    total = 0.0
    while not env.done:
        _, r, _, _ = env.step(random_action(env.feasibility_mask(), rng, env.radio.p_S_max))
        total += r
    return total


def test_single_triple_initial_observation():
    env = make_env([[1.0, 0.0]], N=1, G=1)
    obs = env.reset(0)
    assert obs[0] == 1.0
    assert env.obs_dim == len(obs) == 1 + 2 + 2
    bare = make_env([[1.0, 0.0]], N=1, G=1, aux_features=False, reward_features=False)
    assert bare.reset(0).tolist() == [1.0]


def test_reset_is_deterministic(default_env):
    a = default_env.reset(42).copy()
    mon_a = default_env.monitor.copy()
    b = default_env.reset(42)
    assert np.array_equal(a, b) and np.array_equal(mon_a, default_env.monitor)


def test_identical_actions_reproduce_outcomes(default_env):
    def trace():
        default_env.reset(9)
        outs = []
        k = 0
        while not default_env.done:
            mask = default_env.feasibility_mask()
            sel = k if k < default_env.K and mask[k] else IDLE
            outs.append(default_env.step(ActionCommand(sel, 0.4 if sel != IDLE else 0.0))[3])
            k += 1
        return outs
    assert trace() == trace()


def test_full_monitoring_when_G_equals_N():
    env = make_env(np.eye(3), N=5, G=5)
    env.reset(1)
    assert env.monitor.all()


@settings(max_examples=40, deadline=None)
@given(G=st.integers(0, 12), seed=st.integers(0, 2**31))
def test_monitored_count_matches_budget(G, seed):
    env = make_env(np.eye(4), N=12, G=G)
    env.reset(seed)
    assert env.monitor.sum() == G


def test_monitoring_sets_are_nested_in_G():
    small = make_env(np.eye(4), N=12, G=3)
    big = make_env(np.eye(4), N=12, G=7)
    for seed in range(20):
        small.reset(seed)
        big.reset(seed)
        assert np.all(big.monitor[small.monitor])


def test_feasibility_mask_examples():
    env = make_env(np.eye(3), N=12, G=2)
    env.reset(0)
    assert env.feasibility_mask().all()
    tight = make_env(np.eye(3), N=3, G=2)
    tight.reset(0)
    assert tight.feasibility_mask().tolist() == [True, True, True, False]
    one = make_env(np.eye(1), N=3, G=1)
    one.reset(0)
    one.step(ActionCommand(0, 0.1))
    assert one.feasibility_mask().tolist() == [False, True]


def test_illegal_actions_raise(tiny_env):
    tiny_env.reset(0)
    with pytest.raises(ContractViolation):
        tiny_env.step(ActionCommand(0, 1.5))
    with pytest.raises(ContractViolation):
        tiny_env.step(ActionCommand(7, 0.1))
    tiny_env.step(ActionCommand(0, 0.1))
    with pytest.raises(ContractViolation):
        tiny_env.step(ActionCommand(0, 0.1))
    tiny_env.step(ActionCommand(1, 0.1))
    tiny_env.step(ActionCommand(IDLE, 0.0)) if tiny_env.feasibility_mask()[-1] else None
    while not tiny_env.done:
        tiny_env.step(ActionCommand(2, 0.1))
    with pytest.raises(ContractViolation):
        tiny_env.step(ActionCommand(IDLE, 0.0))


def test_idle_that_strands_triples_is_rejected():
    env = make_env(np.eye(2), N=2, G=1)
    env.reset(0)
    with pytest.raises(ContractViolation):
        env.step(ActionCommand(IDLE, 0.0))


def test_episode_metrics_before_done(tiny_env):
    tiny_env.reset(0)
    with pytest.raises(ContractViolation):
        tiny_env.episode_metrics()


def test_clean_delivery_return():
    # low power: user always succeeds, nobody can decode at the attacker
    env = make_env(np.eye(3), N=3, G=3)
    env.reset(5)
    rewards = [env.step(ActionCommand(k, 0.1))[1] for k in range(3)]
    m = env.episode_metrics()
    assert (m.E_U_final, m.E_A_final, m.private, m.triple_delivery_pct) == (1.0, 0.0, True, 100.0)
    assert sum(rewards) == pytest.approx(1.0 + 0.5, abs=1e-12)
    assert rewards[0] == pytest.approx(1 / 3)


def test_silent_episode_scores_zero_delivery():
    env = make_env(np.eye(2), N=2, G=0)
    env.reset(0)
    env.step(ActionCommand(0, 0.0))
    env.step(ActionCommand(1, 0.0))
    m = env.episode_metrics()
    assert m.E_U_final == 0.0 and m.episode_return == 0.5


def test_privacy_boundary_is_inclusive():
    # one of two orthogonal triples leaks: E_A = 0.5 = gamma exactly
    env = make_env(np.eye(2), N=2, G=2, attackers=(AttackerSpec(1.0, 100.0),))
    env.reset(0)
    env.step(ActionCommand(0, 1.0))
    env.step(ActionCommand(1, 0.0))
    m = env.episode_metrics()
    assert m.E_A_final == 0.5 and m.private
    assert m.episode_return == pytest.approx(env.expected_return(), abs=1e-12)


def test_leak_gives_minus_eta():
    env = make_env(np.eye(2), N=2, G=2, attackers=(AttackerSpec(1.0, 100.0),))
    env.reset(0)
    env.step(ActionCommand(0, 1.0))
    _, r, _, out = env.step(ActionCommand(1, 1.0))
    assert out.E_A == 1.0 and out.step_reward == 0.0
    assert env.episode_metrics().episode_return == pytest.approx(-1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), act=st.integers(0, 2**31), n_att=st.integers(1, 3), G=st.integers(0, 12))
def test_return_matches_closed_form_and_constraints(seed, act, n_att, G):
    attackers = tuple(AttackerSpec(1.0, 1.25 + 0.05 * i) for i in range(n_att))
    env = make_env(np.random.default_rng(seed).normal(size=(6, 8)), N=12, G=G, attackers=attackers)
    total = run_random(env, seed, act)
    assert abs(total - env.expected_return()) <= 1e-12
    assert audit_episode(env) == 0
    for o in env.outcomes:
        for a in o.attackers:
            if a.eavesdropped:
                assert a.monitored and a.detected and o.transmitted


def test_multi_slot_selection_with_B2():
    env = make_env(np.eye(4), N=2, G=1, B=2)
    env.reset(0)
    _, _, _, out = env.step(ActionCommand((0, 1), 0.1))
    assert out.transmitted == (0, 1)
    with pytest.raises(ContractViolation):
        env.step(ActionCommand((2, 3, 0), 0.1))


def test_config_validation():
    with pytest.raises(ConfigError):
        make_env(np.eye(5), N=4, G=2)
    with pytest.raises(ConfigError):
        make_env(np.eye(2), N=4, G=5)
    with pytest.raises(ConfigError):
        EpisodeConfig(attackers=(AttackerSpec(1, 1, monitoring="fixed", fixed_slots=(0, 1)),), G=3).validate(2)


def test_first_and_fixed_strategies():
    env = make_env(np.eye(2), N=6, G=2, attackers=(AttackerSpec(1, 1.25, monitoring="first"),
                                                     AttackerSpec(1, 1.25, monitoring="fixed", fixed_slots=(4, 5))))
    env.reset(0)
    assert env.monitor[0].tolist() == [True, True, False, False, False, False]
    assert env.monitor[1].tolist() == [False, False, False, False, True, True]
