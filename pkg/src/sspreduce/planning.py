"""Exact SSP planning by value iteration, policy evaluation and instance parameters."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mdp import SspMdp

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**6
DIVERGENCE_CAP = 1e9


class Diverged(RuntimeError):
    """Value iteration did not settle: no proper policy, or an improper optimum."""


def check_policy(mdp: SspMdp, pi) -> np.ndarray:
    """Return ``pi`` as an int array of length |S| after range checks."""
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (mdp.num_states,):
        raise ValueError(f"policy must have shape ({mdp.num_states},), got {pi.shape}")
    if pi.min() < 0 or pi.max() >= mdp.num_actions:
        raise ValueError("policy action out of range")
    return pi


def ssp_optimal_values(mdp: SspMdp, cost_override=None, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER):
    """Optimal cost-to-go by value iteration from J = 0.

    Iterates ``J(s) <- min_a c(s,a) + sum_{s' != g} P(s'|s,a) J(s')`` until the
    sup-norm change is at most ``tol``. Pass ``cost_override=np.ones(...)`` to
    get minimal expected hitting times instead.

    Returns ``(values, policy)``; the policy is greedy with ties broken toward
    the smallest action index.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    c = mdp.mean_costs if cost_override is None else np.asarray(cost_override, dtype=np.float64)
    if c.shape != mdp.mean_costs.shape:
        raise ValueError(f"cost_override must have shape {mdp.mean_costs.shape}")
    if np.any(c < 0):
        raise ValueError("cost_override entries must be nonnegative")
    P = mdp.transitions[:, :, : mdp.num_states]

    J = np.zeros(mdp.num_states)
    for _ in range(max_iter):
        J_new = (c + P @ J).min(axis=1)
        change = np.max(np.abs(J_new - J))
        J = J_new
        if change <= tol:
            break
        if J.max() > DIVERGENCE_CAP:
            raise Diverged(f"values exceeded {DIVERGENCE_CAP:g}; no proper policy under these costs")
    else:
        raise Diverged(f"value iteration did not converge in {max_iter} iterations")
    policy = np.argmin(c + P @ J, axis=1).astype(np.int64)
    return J, policy


def _proper_states(mdp: SspMdp, pi: np.ndarray) -> np.ndarray:
    """States from which the Markov chain induced by ``pi`` hits g w.p. 1.

    A state fails iff it can reach (in the support graph) some state that
    cannot reach g at all.
    """
    S = mdp.num_states
    rows = mdp.transitions[np.arange(S), pi]  # (S, S+1)
    support = rows > 0
    reaches_goal = np.zeros(S + 1, dtype=bool)
    reaches_goal[S] = True
    queue = deque([S])
    while queue:
        t = queue.popleft()
        for s in np.flatnonzero(support[:, t]):
            if not reaches_goal[s]:
                reaches_goal[s] = True
                queue.append(s)
    trapped = ~reaches_goal[:S]
    tainted = trapped.copy()
    queue = deque(np.flatnonzero(trapped).tolist())
    while queue:
        t = queue.popleft()
        for s in np.flatnonzero(support[:, t]):
            if not tainted[s]:
                tainted[s] = True
                queue.append(s)
    return ~tainted


def policy_values(mdp: SspMdp, pi, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Cost-to-go and expected hitting time of a stationary policy.

    Returns ``(J, T, proper)``. States from which ``pi`` may never reach the goal
    get ``inf`` in both tables and make ``proper`` false; the remaining states
    are evaluated by fixed-point iteration.
    """
    pi = check_policy(mdp, pi)
    S = mdp.num_states
    idx = np.arange(S)
    ok = _proper_states(mdp, pi)
    P = mdp.transitions[idx, pi, :S] * ok[None, :]
    c = mdp.mean_costs[idx, pi] * ok
    unit = ok.astype(np.float64)

    J = np.zeros(S)
    T = np.zeros(S)
    converged = False
    for _ in range(max_iter):
        J_new = c + P @ J
        T_new = unit + P @ T
        change = max(np.max(np.abs(J_new - J)), np.max(np.abs(T_new - T)))
        J, T = J_new, T_new
        if change <= tol:
            converged = True
            break
        if T.max() > DIVERGENCE_CAP:
            break
    if not converged:
        ok = np.zeros(S, dtype=bool)
    J = np.where(ok, J, np.inf)
    T = np.where(ok, T, np.inf)
    return J, T, bool(ok.all())


@dataclass(frozen=True)
class InstanceParameters:
    b_star: float
    t_star: float
    diameter: float
    j_opt_init: float
    optimal_values: np.ndarray = field(default=None, repr=False, compare=False)
    optimal_policy: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "b_star": self.b_star,
            "t_star": self.t_star,
            "diameter": self.diameter,
            "j_opt_init": self.j_opt_init,
        }


def instance_parameters(mdp: SspMdp, tol: float = DEFAULT_TOL,
                        max_iter: Optional[int] = None) -> InstanceParameters:
    """B*, T*, D and the initial-distribution optimal cost of ``mdp``.

    T* is the worst-state hitting time of the tie-broken optimal policy; it
    raises :class:`Diverged` when that policy is improper (zero-cost loops).
    """
    max_iter = DEFAULT_MAX_ITER if max_iter is None else max_iter
    J_opt, pi_opt = ssp_optimal_values(mdp, tol=tol, max_iter=max_iter)
    J_pi, T_pi, proper = policy_values(mdp, pi_opt, tol=tol, max_iter=max_iter)
    if not proper:
        raise Diverged("the greedy optimal policy is improper (zero-cost cycle); "
                       "perturb the costs so that reaching the goal is strictly preferred")
    hit, _ = ssp_optimal_values(mdp, cost_override=np.ones_like(mdp.mean_costs),
                                tol=tol, max_iter=max_iter)
    return InstanceParameters(
        b_star=float(J_pi.max()),
        t_star=float(T_pi.max()),
        diameter=float(hit.max()),
        j_opt_init=float(mdp.initial_dist @ J_pi),
        optimal_values=J_opt,
        optimal_policy=pi_opt,
    )
