"""Drive SSP episodes as a sequence of H-step finite-horizon intervals."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .finite_horizon import Trajectory, terminal_costs
from .mdp import SspMdp, sample_cost, sample_initial_state, sample_transition
from .rng import RngStream
from .ulcvi import AdmissibilityProfile, UlcviParams, init_learner

PAD_ACTION = 0
COST_BOUND_FACTOR = 9.0
LEARNER_DELTA_DIVISOR = 4.0


class IncompleteRun(RuntimeError):
    """The step budget ran out before all episodes reached the goal."""

    def __init__(self, runlog: "RunLog"):
        self.runlog = runlog
        super().__init__(f"step budget {runlog.total_steps} exhausted after "
                         f"{len(runlog.episode_costs)} of {runlog.k} episodes")


class Learner(Protocol):
    horizon: int

    def begin_episode(self, state: int) -> np.ndarray: ...

    def observe_step(self, s: int, a: int, cost: float, s_next: int) -> None: ...

    def end_episode(self, trajectory: Trajectory) -> None: ...


@dataclass(frozen=True, eq=False)
class LearnerSetup:
    """Everything the reduction hands to a learner factory."""

    num_states: int  # extended space, goal last
    num_actions: int
    horizon: int
    delta: float
    terminal_costs: np.ndarray
    b_star_bound: float
    bonus_scale: float
    rng: RngStream


LearnerFactory = Callable[[LearnerSetup], Learner]


def ulcvi_factory(record_history: bool = False) -> LearnerFactory:
    def make(setup: LearnerSetup):
        params = UlcviParams(setup.horizon, setup.delta, setup.terminal_costs,
                             setup.b_star_bound, setup.bonus_scale)
        return init_learner(params, setup.num_states, setup.num_actions,
                            goal_state=setup.num_states - 1, record_history=record_history)
    return make


class UniformRandomLearner:
    """Baseline that plays uniformly random actions and learns nothing."""

    def __init__(self, setup: LearnerSetup):
        self.horizon = setup.horizon
        self.num_states = setup.num_states
        self.num_actions = setup.num_actions
        self.rng = setup.rng

    def begin_episode(self, state: int) -> np.ndarray:
        u = self.rng.uniform_array((self.horizon, self.num_states))
        return np.minimum((u * self.num_actions).astype(np.int64), self.num_actions - 1)

    def observe_step(self, s, a, cost, s_next) -> None:
        pass

    def end_episode(self, trajectory) -> None:
        pass


def uniform_random_factory() -> LearnerFactory:
    return UniformRandomLearner


def compute_horizon(t_star: float, k: int) -> int:
    """``ceil(8 * t_star * ln(8k))``, at least 1."""
    if not t_star > 0:
        raise ValueError("t_star must be positive")
    if k < 1:
        raise ValueError("k must be at least 1")
    return max(1, math.ceil(8.0 * t_star * math.log(8.0 * k)))


@dataclass(frozen=True)
class ReductionConfig:
    k: int
    delta: float
    b_star: float
    t_star: float
    max_total_steps: Optional[int] = None
    bonus_scale: float = 1.0
    allow_zero_cost: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.t_star > 0:
            raise ValueError("t_star must be positive")
        if self.b_star < 0 or (self.b_star == 0 and not self.allow_zero_cost):
            raise ValueError("b_star must be positive (set allow_zero_cost for b_star = 0)")
        if self.t_star < self.b_star:
            raise ValueError("t_star must be at least b_star")

    @property
    def horizon(self) -> int:
        return compute_horizon(self.t_star, self.k)

    @property
    def step_budget(self) -> int:
        if self.max_total_steps is not None:
            return self.max_total_steps
        return 10 * self.k * self.horizon + 10**6


@dataclass(eq=False)
class RunLog:
    k: int
    horizon: int
    seed: int
    config: dict
    episode_steps: list = field(default_factory=list)
    episode_costs: list = field(default_factory=list)
    episode_intervals: list = field(default_factory=list)
    interval_lengths: list = field(default_factory=list)
    interval_reached_goal: list = field(default_factory=list)
    # smallest pre-step visit count of any pair played in the interval
    interval_min_prior_visits: list = field(default_factory=list)
    total_steps: int = 0
    complete: bool = False
    wall_time: float = 0.0

    @property
    def m_intervals(self) -> int:
        return len(self.interval_lengths)

    def same_as(self, other: "RunLog") -> bool:
        """Equality on everything except wall time."""
        a, b = asdict(self), asdict(other)
        a.pop("wall_time")
        b.pop("wall_time")
        return a == b


def play_interval(ssp: SspMdp, learner: Learner, state: int, index: int,
                  rng_cost: RngStream, rng_next: RngStream,
                  visits: Optional[np.ndarray] = None, budget: Optional[int] = None):
    """Run one H-step interval from ``state``.

    Returns ``(trajectory, real_steps, min_prior_visits)``. If ``budget`` steps
    run out first, the trajectory is left truncated (unpadded) and is not
    reported to the learner.
    """
    H = learner.horizon
    g = ssp.goal
    policy = learner.begin_episode(state)
    states, actions, costs = [state], [], []
    goal_step = 0 if state == g else None
    min_prior = np.iinfo(np.int64).max
    s = state
    for h in range(H):
        if s == g:
            break
        if budget is not None and h >= budget:
            return Trajectory(index, states, actions, costs, None), h, min_prior
        a = int(policy[h, s])
        c = sample_cost(ssp, s, a, rng_cost)
        s_next = sample_transition(ssp, s, a, rng_next)
        learner.observe_step(s, a, c, s_next)
        if visits is not None:
            min_prior = min(min_prior, int(visits[s, a]))
            visits[s, a] += 1
        states.append(s_next)
        actions.append(a)
        costs.append(c)
        s = s_next
        if s == g:
            goal_step = h + 1
    real = len(actions)
    while len(actions) < H:
        actions.append(PAD_ACTION)
        costs.append(0.0)
        states.append(g)
    traj = Trajectory(index, states, actions, costs, goal_step)
    learner.end_episode(traj)
    return traj, real, min_prior


def make_learner(ssp: SspMdp, factory: LearnerFactory, cfg: ReductionConfig, rng: RngStream):
    setup = LearnerSetup(
        num_states=ssp.num_states + 1,
        num_actions=ssp.num_actions,
        horizon=cfg.horizon,
        delta=cfg.delta / LEARNER_DELTA_DIVISOR,
        terminal_costs=terminal_costs(ssp.num_states, cfg.b_star),
        b_star_bound=COST_BOUND_FACTOR * cfg.b_star,
        bonus_scale=cfg.bonus_scale,
        rng=rng.spawn("learner"),
    )
    return factory(setup), setup


def run_ssp_reduction(ssp: SspMdp, learner_factory: LearnerFactory, cfg: ReductionConfig,
                      rng: RngStream, learner_out: Optional[list] = None) -> RunLog:
    """Play ``cfg.k`` SSP episodes through a finite-horizon learner.

    Only realised step costs enter the log; terminal costs live inside the
    learner's objective. Raises :class:`IncompleteRun` (carrying the partial
    log) if ``cfg.step_budget`` is exhausted. If ``learner_out`` is a list, the
    learner instance is appended to it for inspection.
    """
    t0 = time.perf_counter()
    learner, _ = make_learner(ssp, learner_factory, cfg, rng)
    if learner_out is not None:
        learner_out.append(learner)
    rng_init, rng_cost, rng_next = rng.spawn("init"), rng.spawn("cost"), rng.spawn("transition")
    H = cfg.horizon
    log = RunLog(k=cfg.k, horizon=H, seed=rng.seed, config=asdict(cfg))
    visits = np.zeros((ssp.num_states, ssp.num_actions), dtype=np.int64)
    budget = cfg.step_budget
    g = ssp.goal

    for _ in range(cfg.k):
        s = sample_initial_state(ssp, rng_init)
        ep_steps, ep_cost, ep_intervals = 0, 0.0, 0
        while s != g:
            remaining = budget - log.total_steps
            traj, n, min_prior = play_interval(ssp, learner, s, log.m_intervals + 1, rng_cost,
                                               rng_next, visits, remaining)
            ep_steps += n
            ep_cost += sum(traj.costs[:n])
            ep_intervals += 1
            log.total_steps += n
            log.interval_lengths.append(n)
            log.interval_reached_goal.append(traj.goal_step is not None)
            log.interval_min_prior_visits.append(min_prior)
            s = traj.states[-1]
            if s != g and log.total_steps >= budget:
                log.episode_steps.append(ep_steps)
                log.episode_costs.append(ep_cost)
                log.episode_intervals.append(ep_intervals)
                log.wall_time = time.perf_counter() - t0
                raise IncompleteRun(log)
        log.episode_steps.append(ep_steps)
        log.episode_costs.append(ep_cost)
        log.episode_intervals.append(ep_intervals)
    log.complete = True
    log.wall_time = time.perf_counter() - t0
    return log


def run_finite_horizon_episodes(ssp: SspMdp, learner: Learner, num_episodes: int, rng: RngStream,
                                initial_states=None) -> list:
    """Plain finite-horizon play: every episode is one interval from a fresh start.

    Starts come from ``initial_states`` (a sequence) or the instance's initial
    distribution. Returns per-episode realised costs (terminal costs excluded).
    """
    rng_init, rng_cost, rng_next = rng.spawn("init"), rng.spawn("cost"), rng.spawn("transition")
    out = []
    for m in range(num_episodes):
        s = initial_states[m] if initial_states is not None else sample_initial_state(ssp, rng_init)
        traj, _, _ = play_interval(ssp, learner, s, m + 1, rng_cost, rng_next)
        out.append(sum(traj.costs))
    return out


def interval_bound(k: int, num_states: int, num_actions: int, omega: float,
                   t_star: float, delta: float) -> float:
    """``4K + 4e4 |S||A| omega ln(K T* |S||A| omega / delta)``."""
    sa = num_states * num_actions
    return 4.0 * k + 4e4 * sa * omega * math.log(k * t_star * sa * omega / delta)


def interval_diagnostics(runlog: RunLog, profile: AdmissibilityProfile) -> dict:
    """Interval count versus its high-probability bound, and 'bad' intervals.

    An interval is bad when it neither reached the goal nor played any pair
    that was still unknown (fewer than ``known_threshold(M)`` prior visits).
    """
    m = runlog.m_intervals
    cfg = runlog.config
    bound = interval_bound(runlog.k, profile.num_states, profile.num_actions, profile.omega,
                           cfg["t_star"], cfg["delta"])
    threshold = profile.known_threshold(m)
    bad = sum(1 for reached, lo in zip(runlog.interval_reached_goal, runlog.interval_min_prior_visits)
              if not reached and lo >= threshold)
    return {
        "m_intervals": m,
        "k": runlog.k,
        "bound": bound,
        "within_bound": m <= bound,
        "known_threshold": threshold,
        "bad_intervals": bad,
    }
