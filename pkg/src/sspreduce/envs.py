"""Instance generators: random SSPs, closed-form chains and the lower-bound family."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mdp import CostModel, SspMdp, validate_mdp
from .rng import RngStream


class SpecViolation(ValueError):
    pass


def default_epsilon(b_star: float, num_states: int, num_actions: int, k: int) -> float:
    return math.sqrt(b_star * num_actions * num_states / k) / 8.0


@dataclass(frozen=True)
class LowerBoundSpec:
    num_states: int
    num_actions: int
    b_star: float
    k: int
    epsilon: Optional[float] = None

    @property
    def gap(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return default_epsilon(self.b_star, self.num_states, self.num_actions, self.k)

    def check(self) -> None:
        if self.num_states < 2 or self.num_actions < 2:
            raise SpecViolation("lower-bound instances need |S| >= 2 and |A| >= 2")
        if self.k < 1:
            raise SpecViolation("k must be at least 1")
        if not 0 < self.b_star <= 0.5:
            raise SpecViolation("b_star must lie in (0, 1/2]")
        eps = self.gap
        if not 0 < eps < 1 / 8:
            raise SpecViolation(f"epsilon={eps} must lie in (0, 1/8)")
        if self.b_star + eps > 1:
            raise SpecViolation("b_star + epsilon must not exceed 1")


def special_actions(spec: LowerBoundSpec, seed: int) -> np.ndarray:
    rng = RngStream(seed, "instance/special-actions")
    return np.array([rng.integers(spec.num_actions) for _ in range(spec.num_states)], dtype=np.int64)


def lower_bound_instance(spec: LowerBoundSpec, seed: int) -> SspMdp:
    """One-step SSP where each state hides a special action that is cheaper by epsilon.

    Every action jumps to the goal; costs are Bernoulli(b_star) for the special
    action and Bernoulli(b_star + epsilon) otherwise; starts are uniform.
    """
    spec.check()
    S, A = spec.num_states, spec.num_actions
    best = special_actions(spec, seed)
    P = np.zeros((S, A, S + 1))
    P[:, :, S] = 1.0
    c = np.full((S, A), spec.b_star + spec.gap)
    c[np.arange(S), best] = spec.b_star
    return validate_mdp({
        "num_states": S,
        "num_actions": A,
        "transitions": P,
        "mean_costs": c,
        "cost_model": CostModel("bernoulli"),
        "initial_dist": np.full(S, 1.0 / S),
    })


def random_ssp(num_states: int, num_actions: int, goal_prob_range=(0.1, 0.5),
               cost_range=(0.0, 1.0), connectivity: float = 0.5, seed: int = 0,
               cost_model="bernoulli", initial_state: Optional[int] = 0) -> SspMdp:
    """Random instance where every action reaches the goal w.p. at least ``goal_prob_range[0]``.

    Each (s, a) row draws its goal probability uniformly from the range, keeps
    each non-goal state with probability ``connectivity`` and splits the rest of
    the mass over the kept states with normalised uniform weights. Costs are
    uniform in ``cost_range``. ``initial_state=None`` gives a uniform start.
    """
    lo, hi = map(float, goal_prob_range)
    c_lo, c_hi = map(float, cost_range)
    if num_states < 1 or num_actions < 1:
        raise SpecViolation("need at least one state and one action")
    if not (0 < lo <= hi <= 1):
        raise SpecViolation("goal_prob_range must satisfy 0 < lo <= hi <= 1")
    if not (0 <= c_lo <= c_hi <= 1):
        raise SpecViolation("cost_range must lie within [0, 1]")
    if not 0 <= connectivity <= 1:
        raise SpecViolation("connectivity must lie in [0, 1]")

    rng = RngStream(seed, "instance/random-ssp")
    S, A = num_states, num_actions
    P = np.zeros((S, A, S + 1))
    c = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            p_goal = lo + (hi - lo) * rng.random()
            keep = [t for t in range(S) if rng.random() < connectivity]
            w = np.array([rng.random() for _ in keep])
            if len(keep) == 0 or w.sum() == 0:
                P[s, a, S] = 1.0
            else:
                P[s, a, keep] = (1.0 - p_goal) * w / w.sum()
                P[s, a, S] = 1.0 - P[s, a, :S].sum()
            c[s, a] = c_lo + (c_hi - c_lo) * rng.random()
    if initial_state is None:
        mu = np.full(S, 1.0 / S)
    else:
        mu = np.zeros(S)
        mu[initial_state] = 1.0
    return validate_mdp({
        "num_states": S,
        "num_actions": A,
        "transitions": P,
        "mean_costs": c,
        "cost_model": CostModel.from_dict(cost_model),
        "initial_dist": mu,
    })


def chain_ssp(length: int, forward_prob: float, step_cost: float,
              cost_model="bernoulli") -> SspMdp:
    """Single-action chain s_1 -> ... -> s_n -> g, each hop succeeding w.p. ``forward_prob``.

    Optimal cost from s_i is ``(n - i + 1) * c / p`` and from s_1 the hitting
    time is ``n / p``.
    """
    if length < 1:
        raise SpecViolation("length must be at least 1")
    if not 0 < forward_prob <= 1:
        raise SpecViolation("forward_prob must lie in (0, 1]")
    if not 0 <= step_cost <= 1:
        raise SpecViolation("step_cost must lie in [0, 1]")
    n = length
    P = np.zeros((n, 1, n + 1))
    for i in range(n):
        P[i, 0, i + 1] = forward_prob
        P[i, 0, i] += 1.0 - forward_prob
    mu = np.zeros(n)
    mu[0] = 1.0
    return validate_mdp({
        "num_states": n,
        "num_actions": 1,
        "transitions": P,
        "mean_costs": np.full((n, 1), float(step_cost)),
        "cost_model": CostModel.from_dict(cost_model),
        "initial_dist": mu,
    })


def _lower_bound_from_params(seed: int, num_states: int, num_actions: int, b_star: float, k: int,
                             epsilon: Optional[float] = None) -> SspMdp:
    return lower_bound_instance(LowerBoundSpec(num_states, num_actions, b_star, k, epsilon), seed)


GENERATORS = {
    "random_ssp": lambda seed, **kw: random_ssp(seed=seed, **kw),
    "chain_ssp": lambda seed, **kw: chain_ssp(**kw),
    "lower_bound": _lower_bound_from_params,
}


def generate(name: str, params: dict, seed: int) -> SspMdp:
    """Build an instance by generator name; ``params`` may pin its own ``seed``."""
    if name not in GENERATORS:
        raise KeyError(f"unknown generator {name!r}; known: {sorted(GENERATORS)}")
    params = dict(params)
    seed = int(params.pop("seed", seed))
    return GENERATORS[name](seed, **params)
