"""ULCVI: optimistic/pessimistic value iteration with variance-aware bonuses.

The learner works on the finite-horizon state space (goal included as the last
index by default). Goal dynamics are pinned, not learned: steps taken at the
goal are ignored, its model row is a zero-cost self-loop and it gets no bonus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .finite_horizon import Trajectory

# L_m = 3 ln(LOG_FACTOR_INNER * |S||A|H m / delta); some derivations use 6 here.
LOG_FACTOR_INNER = 3.0
TRANSITION_BONUS_CONSTANT = 62.0
COST_BONUS_CONSTANT = 5.0


class LengthMismatch(ValueError):
    pass


def log_factor(num_states: int, num_actions: int, horizon: int, m: int, delta: float,
               inner: float = LOG_FACTOR_INNER) -> float:
    return 3.0 * math.log(inner * num_states * num_actions * horizon * m / delta)


@dataclass(frozen=True, eq=False)
class UlcviParams:
    """Inputs of the learner.

    ``b_star_bound`` bounds the optimal expected cost (the reduction passes
    nine times its own bound); every B* appearing in the bonuses means this.
    """

    horizon: int
    delta: float
    terminal_costs: np.ndarray
    b_star_bound: float
    bonus_scale: float = 1.0
    log_inner: float = LOG_FACTOR_INNER

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.b_star_bound > 0:
            raise ValueError("b_star_bound must be positive")
        if not self.bonus_scale >= 0:
            raise ValueError("bonus_scale must be nonnegative")
        tc = np.array(self.terminal_costs, dtype=np.float64)
        tc.setflags(write=False)
        object.__setattr__(self, "terminal_costs", tc)


def empirical_cost_variance(count, total, sumsq):
    """Population variance (1/n normalisation) from count, sum and sum of squares."""
    count = np.asarray(count, dtype=np.float64)
    n = np.maximum(count, 1.0)
    mean = np.asarray(total) / n
    var = np.asarray(sumsq) / n - mean**2
    return np.where(count > 0, np.maximum(var, 0.0), 0.0)


def cost_bonus(count, cost_var, log_m: float, bonus_scale: float = 1.0):
    n = np.maximum(count, 1)
    return bonus_scale * (np.sqrt(2.0 * cost_var * log_m / n) + COST_BONUS_CONSTANT * log_m / n)


def transition_bonus(count, p_bar, lower_next, upper_next, log_m: float, horizon: int,
                     num_states: int, b_star_bound: float, bonus_scale: float = 1.0):
    """Transition bonus for one or many (s, a) rows of the empirical model.

    ``p_bar`` is ``(..., S)`` and ``count`` broadcasts against ``p_bar[..., 0]``.
    """
    n = np.maximum(count, 1)
    mean = p_bar @ lower_next
    var = np.maximum(p_bar @ (lower_next * lower_next) - mean * mean, 0.0)
    gap = p_bar @ (upper_next - lower_next)
    H = float(horizon)
    return bonus_scale * (
        np.sqrt(2.0 * var * log_m / n)
        + TRANSITION_BONUS_CONSTANT * H**3 / b_star_bound * num_states * log_m / n
        + b_star_bound / (16.0 * H * H) * gap
    )


@dataclass(eq=False)
class Snapshot:
    """Model frozen at the last replan."""

    counts: np.ndarray  # n(s,a)
    next_counts: np.ndarray  # n(s,a,s')
    p_bar: np.ndarray
    c_bar: np.ndarray
    cost_var: np.ndarray


def make_snapshot(counts, next_counts, cost_sum, cost_sumsq, goal: Optional[int] = None) -> Snapshot:
    counts = np.array(counts, dtype=np.int64)
    next_counts = np.array(next_counts, dtype=np.int64)
    n_states = counts.shape[0]
    n = np.maximum(counts, 1)[:, :, None]
    p_bar = next_counts / n
    unvisited = counts == 0
    p_bar[unvisited] = np.eye(n_states)[np.nonzero(unvisited)[0]]
    c_bar = np.asarray(cost_sum, dtype=np.float64) / np.maximum(counts, 1)
    cost_var = empirical_cost_variance(counts, cost_sum, cost_sumsq)
    if goal is not None:
        p_bar[goal] = 0.0
        p_bar[goal, :, goal] = 1.0
        c_bar[goal] = 0.0
        cost_var[goal] = 0.0
    return Snapshot(counts, next_counts, p_bar, c_bar, cost_var)


def opvi(snapshot: Snapshot, params: UlcviParams, m: int, goal: Optional[int] = None):
    """Optimistic-pessimistic value iteration on the snapshot model.

    Returns ``(lower, upper, policy)`` with value tables of shape ``(H+1, S)``
    and a policy of shape ``(H, S)`` greedy in the optimistic Q.
    """
    n_states, n_actions = snapshot.counts.shape
    H = params.horizon
    log_m = log_factor(n_states, n_actions, H, m, params.delta, params.log_inner)
    bc = cost_bonus(snapshot.counts, snapshot.cost_var, log_m, params.bonus_scale)
    idx = np.arange(n_states)

    lower = np.empty((H + 1, n_states))
    upper = np.empty((H + 1, n_states))
    policy = np.empty((H, n_states), dtype=np.int64)
    lower[H] = params.terminal_costs
    upper[H] = params.terminal_costs
    p_bar, c_bar = snapshot.p_bar, snapshot.c_bar
    for h in range(H - 1, -1, -1):
        bonus = bc + transition_bonus(snapshot.counts, p_bar, lower[h + 1], upper[h + 1], log_m,
                                      H, n_states, params.b_star_bound, params.bonus_scale)
        if goal is not None:
            bonus[goal] = 0.0
        q_low = c_bar - bonus + p_bar @ lower[h + 1]
        q_up = c_bar + bonus + p_bar @ upper[h + 1]
        a = np.argmin(q_low, axis=1)
        policy[h] = a
        lower[h] = np.maximum(q_low[idx, a], 0.0)
        upper[h] = np.minimum(q_up[idx, a], H)
    if goal is not None:
        policy[:, goal] = 0
    return lower, upper, policy


@dataclass(frozen=True)
class AdmissibilityProfile:
    omega: float
    num_states: int
    num_actions: int
    horizon: int
    delta: float

    def known_threshold(self, num_episodes: int) -> float:
        """Visits after which a pair counts as known, for ``num_episodes`` episodes."""
        return self.omega * math.log(
            max(num_episodes, 1) * self.horizon * self.num_states * self.num_actions / self.delta)


def admissibility_profile(params: UlcviParams, num_states: int, num_actions: int) -> AdmissibilityProfile:
    omega = params.horizon**4 / params.b_star_bound**2 * num_states
    return AdmissibilityProfile(float(omega), num_states, num_actions, params.horizon, params.delta)


@dataclass
class ReplanRecord:
    m: int
    cause: str
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    policy: np.ndarray = field(repr=False)


class UlcviLearner:
    """Mutable learner state; one instance per run.

    Call :meth:`begin_episode` with the initial state to get the policy,
    :meth:`observe_step` once per real step and :meth:`end_episode` with the
    padded trajectory.
    """

    def __init__(self, params: UlcviParams, num_states: int, num_actions: int,
                 goal_state: Optional[int] = -1, record_history: bool = False):
        if len(params.terminal_costs) != num_states:
            raise ValueError("terminal_costs must have one entry per state (goal included)")
        if goal_state is not None and goal_state < 0:
            goal_state += num_states
        self.params = params
        self.num_states = num_states
        self.num_actions = num_actions
        self.goal = goal_state
        S, A = num_states, num_actions

        self.visits = np.zeros((S, A), dtype=np.int64)
        self.next_visits = np.zeros((S, A, S), dtype=np.int64)
        self.cost_sum = np.zeros((S, A))
        self.cost_sumsq = np.zeros((S, A))
        self.snapshot = make_snapshot(self.visits, self.next_visits, self.cost_sum,
                                      self.cost_sumsq, self.goal)

        H = params.horizon
        self.lower = np.zeros((H + 1, S))
        self.upper = np.zeros((H + 1, S))
        self.policy = np.zeros((H, S), dtype=np.int64)
        self.planning_trigger = True
        self._trigger_cause = "init"
        self.m = 0
        self.episodes_completed = 0
        self.replan_count = 0
        self.replan_log: list[dict] = []
        self.history: Optional[list[ReplanRecord]] = [] if record_history else None
        self._in_episode = False
        self._episode_steps = 0

    @property
    def horizon(self) -> int:
        return self.params.horizon

    def begin_episode(self, state: int) -> np.ndarray:
        if self._in_episode:
            raise RuntimeError("begin_episode called twice without end_episode")
        if not 0 <= state < self.num_states:
            raise IndexError(f"state {state} out of range")
        self.m += 1
        if self.planning_trigger:
            self._replan()
        self._in_episode = True
        self._episode_steps = 0
        return self.policy

    def _replan(self) -> None:
        self.snapshot = make_snapshot(self.visits, self.next_visits, self.cost_sum,
                                      self.cost_sumsq, self.goal)
        self.lower, self.upper, self.policy = opvi(self.snapshot, self.params, self.m, self.goal)
        self.replan_count += 1
        gap = float(np.max(self.upper[:-1] - self.lower[:-1]))
        self.replan_log.append({"m": self.m, "cause": self._trigger_cause, "max_gap": gap})
        if self.history is not None:
            self.history.append(ReplanRecord(self.m, self._trigger_cause, self.lower.copy(),
                                             self.upper.copy(), self.policy.copy()))
        self.planning_trigger = False
        self._trigger_cause = ""

    def observe_step(self, s: int, a: int, cost: float, s_next: int) -> None:
        if not (0 <= s < self.num_states and 0 <= a < self.num_actions
                and 0 <= s_next < self.num_states):
            raise IndexError(f"step ({s}, {a}, {s_next}) out of range")
        if s == self.goal:
            return
        self.visits[s, a] += 1
        self.next_visits[s, a, s_next] += 1
        self.cost_sum[s, a] += cost
        self.cost_sumsq[s, a] += cost * cost
        self._episode_steps += 1
        if not self.planning_trigger and self.visits[s, a] >= 2 * self.snapshot.counts[s, a]:
            self.planning_trigger = True
            self._trigger_cause = f"doubling({s},{a})"

    def end_episode(self, trajectory: Trajectory) -> None:
        H = self.horizon
        if len(trajectory.actions) != H or len(trajectory.costs) != H or len(trajectory.states) != H + 1:
            raise LengthMismatch(f"trajectory must be padded to horizon {H}")
        real = sum(1 for s in trajectory.states[: trajectory.real_steps] if s != self.goal)
        if real != self._episode_steps:
            raise LengthMismatch(f"trajectory has {real} real steps but {self._episode_steps} were observed")
        self._in_episode = False
        self.episodes_completed += 1


def init_learner(params: UlcviParams, num_states: int, num_actions: int,
                 goal_state: Optional[int] = -1, record_history: bool = False) -> UlcviLearner:
    return UlcviLearner(params, num_states, num_actions, goal_state, record_history)
