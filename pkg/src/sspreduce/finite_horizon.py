"""The finite-horizon model induced by an SSP instance, plus exact evaluators.

Value tables have shape ``(H+1, S+1)``: row ``h-1`` holds step ``h`` for
``h = 1..H+1``, and the goal is the explicit last state. Policies have shape
``(H, S+1)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mdp import SspMdp

TERMINAL_COST_FACTOR = 8.0
MAX_BRUTE_FORCE_POLICIES = 10**6


class TooLarge(ValueError):
    """Exhaustive policy enumeration would exceed the configured budget."""


@dataclass(frozen=True, eq=False)
class FiniteHorizonMdp:
    transitions: np.ndarray  # (S+1, A, S+1), goal absorbing
    mean_costs: np.ndarray  # (S+1, A), zero at the goal
    terminal_costs: np.ndarray  # (S+1,)
    horizon: int

    @property
    def num_states(self) -> int:
        """Size of the extended state space, goal included."""
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def goal(self) -> int:
        return self.num_states - 1


@dataclass
class Trajectory:
    """One interval: ``states`` has H+1 entries, ``actions`` and ``costs`` H.

    ``goal_step`` is the number of real steps taken when the goal was first
    reached; every later step is padding (goal, action 0, zero cost).
    """

    index: int
    states: list
    actions: list
    costs: list
    goal_step: Optional[int] = None

    @property
    def padded(self) -> bool:
        return self.goal_step is not None and self.goal_step < len(self.actions)

    @property
    def real_steps(self) -> int:
        return len(self.actions) if self.goal_step is None else self.goal_step


def terminal_costs(num_ssp_states: int, b_star: float) -> np.ndarray:
    """``8 * b_star`` on every non-goal state, zero on the goal."""
    out = np.full(num_ssp_states + 1, TERMINAL_COST_FACTOR * float(b_star))
    out[-1] = 0.0
    return out


def build_finite_horizon(ssp: SspMdp, b_star: float, horizon: int) -> FiniteHorizonMdp:
    if b_star < 0:
        raise ValueError("b_star must be nonnegative")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    S, A = ssp.num_states, ssp.num_actions
    P = np.zeros((S + 1, A, S + 1))
    P[:S] = ssp.transitions
    P[S, :, S] = 1.0
    c = np.zeros((S + 1, A))
    c[:S] = ssp.mean_costs
    return FiniteHorizonMdp(P, c, terminal_costs(S, b_star), int(horizon))


def fh_optimal_values(fh: FiniteHorizonMdp):
    """Backward induction. Returns ``(values, policy)``; ties go to the smallest action."""
    H, n = fh.horizon, fh.num_states
    V = np.empty((H + 1, n))
    pi = np.empty((H, n), dtype=np.int64)
    V[H] = fh.terminal_costs
    for h in range(H - 1, -1, -1):
        Q = fh.mean_costs + fh.transitions @ V[h + 1]
        pi[h] = np.argmin(Q, axis=1)
        V[h] = Q[np.arange(n), pi[h]]
    return V, pi


def fh_policy_values(fh: FiniteHorizonMdp, pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.int64)
    H, n = fh.horizon, fh.num_states
    if pi.shape != (H, n):
        raise ValueError(f"policy must have shape {(H, n)}, got {pi.shape}")
    idx = np.arange(n)
    V = np.empty((H + 1, n))
    V[H] = fh.terminal_costs
    for h in range(H - 1, -1, -1):
        V[h] = fh.mean_costs[idx, pi[h]] + fh.transitions[idx, pi[h]] @ V[h + 1]
    return V


def fh_brute_force_optimal(fh: FiniteHorizonMdp, max_policies: int = MAX_BRUTE_FORCE_POLICIES):
    """Step-1 optimal values by enumerating every time-dependent deterministic policy.

    Each policy is scored by pushing the identity (one start state per row)
    forward through its transition matrices. Test oracle only.
    """
    H, n, A = fh.horizon, fh.num_states, fh.num_actions
    # compare exponents first so absurd sizes never build a huge integer
    if H * n * np.log(A) > np.log(max_policies) + 1e-9:
        raise TooLarge(f"{A}^{H * n} policies exceeds the limit of {max_policies}")
    idx = np.arange(n)
    best = np.full(n, np.inf)
    for flat in itertools.product(range(A), repeat=H * n):
        pi = np.asarray(flat, dtype=np.int64).reshape(H, n)
        dist = np.eye(n)
        total = np.zeros(n)
        for h in range(H):
            total += dist @ fh.mean_costs[idx, pi[h]]
            dist = dist @ fh.transitions[idx, pi[h]]
        total += dist @ fh.terminal_costs
        np.minimum(best, total, out=best)
    return best
