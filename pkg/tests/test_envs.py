import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sspreduce.envs import (GENERATORS, LowerBoundSpec, SpecViolation, chain_ssp, default_epsilon,
                            generate, lower_bound_instance, random_ssp, special_actions)
from sspreduce.mdp import mdp_to_dict
from sspreduce.planning import instance_parameters, policy_values


def test_default_epsilon():
    assert default_epsilon(0.25, 2, 2, 10**4) == pytest.approx(0.00125)
    assert default_epsilon(0.5, 3, 4, 100) == pytest.approx(math.sqrt(0.06) / 8)


def test_lower_bound_parameters():
    spec = LowerBoundSpec(3, 2, 0.25, 1000)
    m = lower_bound_instance(spec, seed=7)
    best = special_actions(spec, 7)
    assert np.all(m.transitions[:, :, -1] == 1.0)
    assert np.allclose(m.mean_costs[np.arange(3), best], 0.25)
    assert np.allclose(m.mean_costs.sum(axis=1), 0.25 * 2 + spec.gap)
    ip = instance_parameters(m)
    assert ip.b_star == pytest.approx(0.25)
    assert ip.j_opt_init == pytest.approx(0.25)
    assert ip.t_star == ip.diameter == pytest.approx(1.0)
    assert np.array_equal(ip.optimal_policy, best)


def test_uniform_play_expected_regret():
    spec = LowerBoundSpec(4, 3, 0.3, 500)
    m = lower_bound_instance(spec, seed=1)
    uniform_cost = m.initial_dist @ m.mean_costs.mean(axis=1)
    assert uniform_cost - 0.3 == pytest.approx(spec.gap * (1 - 1 / 3), abs=1e-15)


def test_special_actions_vary_with_seed():
    spec = LowerBoundSpec(8, 4, 0.25, 10**4)
    draws = {tuple(special_actions(spec, s)) for s in range(20)}
    assert len(draws) > 10
    assert np.array_equal(special_actions(spec, 3), special_actions(spec, 3))


@pytest.mark.parametrize("kwargs", [
    dict(num_states=1, num_actions=2, b_star=0.25, k=100),
    dict(num_states=2, num_actions=1, b_star=0.25, k=100),
    dict(num_states=2, num_actions=2, b_star=0.75, k=10**6),
    dict(num_states=2, num_actions=2, b_star=0.25, k=1),
    dict(num_states=2, num_actions=2, b_star=0.25, k=100, epsilon=0.2),
])
def test_lower_bound_spec_violations(kwargs):
    with pytest.raises(SpecViolation):
        lower_bound_instance(LowerBoundSpec(**kwargs), 0)


def test_random_ssp_deterministic():
    a = mdp_to_dict(random_ssp(4, 3, seed=11))
    b = mdp_to_dict(random_ssp(4, 3, seed=11))
    c = mdp_to_dict(random_ssp(4, 3, seed=12))
    assert a == b
    assert a != c


def test_random_ssp_many_valid():
    for seed in range(1000):
        m = random_ssp(1 + seed % 5, 1 + seed % 3, seed=seed)
        assert np.all(m.transitions[:, :, -1] >= 0.1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.floats(0.05, 1.0), st.integers(0, 10**6))
def test_random_ssp_hitting_time_bound(S, A, lo, seed):
    m = random_ssp(S, A, goal_prob_range=(lo, 1.0), seed=seed)
    ip = instance_parameters(m)
    # every action stops w.p. >= lo, so any policy is geometric-dominated
    assert ip.t_star <= 1 / lo + 1e-8
    assert ip.diameter <= 1 / lo + 1e-8
    assert np.all(m.mean_costs >= 0) and np.all(m.mean_costs <= 1)


def test_random_ssp_uniform_start():
    m = random_ssp(4, 2, seed=0, initial_state=None)
    assert np.allclose(m.initial_dist, 0.25)


@pytest.mark.parametrize("kwargs", [
    dict(num_states=0, num_actions=1),
    dict(num_states=2, num_actions=1, goal_prob_range=(0.0, 0.5)),
    dict(num_states=2, num_actions=1, cost_range=(0.5, 1.5)),
    dict(num_states=2, num_actions=1, connectivity=1.5),
])
def test_random_ssp_rejects(kwargs):
    with pytest.raises(SpecViolation):
        random_ssp(**kwargs)


@pytest.mark.parametrize("n,p,c", [(1, 0.1, 1.0), (3, 0.5, 0.4), (5, 1.0, 0.2), (2, 0.25, 0.0)])
def test_chain_closed_forms(n, p, c):
    m = chain_ssp(n, p, c)
    ip = instance_parameters(m)
    expected = [(n - i) * c / p for i in range(n)]
    assert ip.optimal_values == pytest.approx(expected, abs=1e-8)
    _, T, proper = policy_values(m, np.zeros(n, dtype=int))
    assert proper
    assert T[0] == pytest.approx(n / p, abs=1e-8)
    assert ip.j_opt_init == pytest.approx(n * c / p, abs=1e-8)


def test_chain_rejects():
    for args in [(0, 0.5, 0.5), (2, 0.0, 0.5), (2, 0.5, 1.5)]:
        with pytest.raises(SpecViolation):
            chain_ssp(*args)


def test_generate_registry():
    assert set(GENERATORS) == {"random_ssp", "chain_ssp", "lower_bound"}
    m = generate("random_ssp", {"num_states": 3, "num_actions": 2}, seed=5)
    assert mdp_to_dict(m) == mdp_to_dict(random_ssp(3, 2, seed=5))
    pinned = generate("random_ssp", {"num_states": 3, "num_actions": 2, "seed": 1}, seed=5)
    assert mdp_to_dict(pinned) == mdp_to_dict(random_ssp(3, 2, seed=1))
    lb = generate("lower_bound", {"num_states": 2, "num_actions": 2, "b_star": 0.25, "k": 10**4}, 0)
    assert lb.num_states == 2
    with pytest.raises(KeyError):
        generate("nope", {}, 0)
