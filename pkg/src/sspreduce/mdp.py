"""Tabular SSP instances: representation, validation, sampling and JSON I/O.

The goal state is the virtual index ``num_states``; it appears as the last
column of the transition tensor but never as a row.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .rng import RngStream

ROW_TOL = 1e-12

COST_KINDS = ("deterministic", "bernoulli", "beta")


# -- violations -----------------------------------------------------------------

@dataclass(frozen=True)
class NonStochasticRow:
    state: int
    action: int
    total: float


@dataclass(frozen=True)
class CostOutOfRange:
    state: int
    action: int
    value: float


@dataclass(frozen=True)
class GoalUnreachable:
    state: int


@dataclass(frozen=True)
class EmptyStateOrActionSet:
    num_states: int
    num_actions: int


@dataclass(frozen=True)
class NonStochasticInitial:
    total: float


@dataclass(frozen=True)
class ShapeMismatch:
    name: str
    expected: tuple
    got: tuple


class InvalidMdpError(ValueError):
    """Raised by :func:`validate_mdp`; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        shown = ", ".join(repr(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"invalid SSP instance: {shown}{more}")

    def kinds(self) -> set[str]:
        return {type(v).__name__ for v in self.violations}


# -- cost model -----------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    """Distribution of a step cost given its mean ``c(s,a)``.

    ``bernoulli`` pays 1 w.p. c, ``deterministic`` pays c, and ``beta`` draws
    from Beta(k*c, k*(1-c)) with concentration ``k`` (a bounded generic model).
    """

    kind: str = "bernoulli"
    concentration: float = 2.0

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost model kind {self.kind!r}; expected one of {COST_KINDS}")
        if self.kind == "beta" and not self.concentration > 0:
            raise ValueError("beta cost model needs concentration > 0")

    def to_dict(self) -> dict:
        if self.kind == "beta":
            return {"kind": self.kind, "concentration": self.concentration}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, raw) -> "CostModel":
        if isinstance(raw, CostModel):
            return raw
        if raw is None:
            return cls()
        if isinstance(raw, str):
            return cls(kind=raw.lower())
        return cls(kind=str(raw.get("kind", "bernoulli")).lower(),
                   concentration=float(raw.get("concentration", 2.0)))


# -- instance -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SspMdp:
    """A validated tabular SSP instance. Build it through :func:`validate_mdp`."""

    num_states: int
    num_actions: int
    transitions: np.ndarray  # (S, A, S+1); column S is the goal
    mean_costs: np.ndarray  # (S, A)
    cost_model: CostModel
    initial_dist: np.ndarray  # (S,)
    _cdf: list = field(default=None, repr=False)
    _init_cdf: list = field(default=None, repr=False)
    _costs: list = field(default=None, repr=False)

    @property
    def goal(self) -> int:
        return self.num_states

    def __eq__(self, other):
        if not isinstance(other, SspMdp):
            return NotImplemented
        return (self.num_states == other.num_states
                and self.num_actions == other.num_actions
                and self.cost_model == other.cost_model
                and np.array_equal(self.transitions, other.transitions)
                and np.array_equal(self.mean_costs, other.mean_costs)
                and np.array_equal(self.initial_dist, other.initial_dist))

    __hash__ = None


def _cdf_row(p: np.ndarray) -> list:
    cdf = np.cumsum(p)
    last = int(np.flatnonzero(p > 0)[-1])
    cdf[last:] = 1.0
    return cdf.tolist()


def _goal_reachable(transitions: np.ndarray) -> np.ndarray:
    """Backward BFS over the support: which states can reach the goal at all."""
    S = transitions.shape[0]
    support = transitions > 0
    reach = np.zeros(S + 1, dtype=bool)
    reach[S] = True
    # predecessors[t] = states with some action putting mass on t
    preds = [np.flatnonzero(support[:, :, t].any(axis=1)) for t in range(S + 1)]
    queue = deque([S])
    while queue:
        t = queue.popleft()
        for s in preds[t]:
            if not reach[s]:
                reach[s] = True
                queue.append(s)
    return reach[:S]


def _as_fields(raw) -> dict:
    if isinstance(raw, SspMdp):
        return {
            "num_states": raw.num_states,
            "num_actions": raw.num_actions,
            "transitions": raw.transitions,
            "mean_costs": raw.mean_costs,
            "cost_model": raw.cost_model,
            "initial_dist": raw.initial_dist,
        }
    return dict(raw)


def validate_mdp(raw: Union[SspMdp, dict]) -> SspMdp:
    """Check an SSP-shaped mapping (or instance) and return an immutable SspMdp.

    Rows within ``ROW_TOL`` of summing to one are accepted as stored (the
    sampling CDF pins its tail to exactly 1); anything else is reported. All
    violations are collected and raised together as :class:`InvalidMdpError`.
    """
    f = _as_fields(raw)
    S = int(f["num_states"])
    A = int(f["num_actions"])
    if S < 1 or A < 1:
        raise InvalidMdpError([EmptyStateOrActionSet(S, A)])

    P = np.array(f["transitions"], dtype=np.float64)
    c = np.array(f["mean_costs"], dtype=np.float64)
    if "initial_dist" in f and f["initial_dist"] is not None:
        mu = np.array(f["initial_dist"], dtype=np.float64)
    else:
        mu = np.zeros(S)
        mu[0] = 1.0
    cost_model = CostModel.from_dict(f.get("cost_model"))

    shape_errors = []
    for name, arr, expected in (("transitions", P, (S, A, S + 1)),
                                ("mean_costs", c, (S, A)),
                                ("initial_dist", mu, (S,))):
        if arr.shape != expected:
            shape_errors.append(ShapeMismatch(name, expected, arr.shape))
    if shape_errors:
        raise InvalidMdpError(shape_errors)

    violations = []
    sums = P.sum(axis=2)
    for s in range(S):
        for a in range(A):
            row = P[s, a]
            if not np.all(np.isfinite(row)) or row.min() < 0 or abs(sums[s, a] - 1.0) > ROW_TOL:
                violations.append(NonStochasticRow(s, a, float(sums[s, a])))
            cv = c[s, a]
            if not (0.0 <= cv <= 1.0):
                violations.append(CostOutOfRange(s, a, float(cv)))
    mu_total = float(mu.sum())
    if not np.all(np.isfinite(mu)) or mu.min() < 0 or abs(mu_total - 1.0) > ROW_TOL:
        violations.append(NonStochasticInitial(mu_total))

    if not any(isinstance(v, NonStochasticRow) for v in violations):
        reach = _goal_reachable(P)
        violations.extend(GoalUnreachable(int(s)) for s in np.flatnonzero(~reach))
    if violations:
        raise InvalidMdpError(violations)

    for arr in (P, c, mu):
        arr.setflags(write=False)

    cdf = [[_cdf_row(P[s, a]) for a in range(A)] for s in range(S)]
    return SspMdp(S, A, P, c, cost_model, mu, cdf, _cdf_row(mu), c.tolist())


# -- sampling -------------------------------------------------------------------

def _check_index(mdp: SspMdp, s: int, a: int) -> None:
    if not (0 <= s < mdp.num_states and 0 <= a < mdp.num_actions):
        raise IndexError(f"(s={s}, a={a}) outside |S|={mdp.num_states}, |A|={mdp.num_actions}")


def sample_transition(mdp: SspMdp, s: int, a: int, rng: RngStream) -> int:
    """Next state (``mdp.goal`` for g) by inverse CDF on one uniform draw."""
    _check_index(mdp, s, a)
    return bisect_right(mdp._cdf[s][a], rng.random())


def sample_cost(mdp: SspMdp, s: int, a: int, rng: RngStream) -> float:
    """Step cost in [0, 1] with mean ``mean_costs[s, a]``."""
    _check_index(mdp, s, a)
    mean = mdp._costs[s][a]
    kind = mdp.cost_model.kind
    if kind == "bernoulli":
        return 1.0 if rng.random() < mean else 0.0
    if kind == "deterministic" or mean <= 0.0 or mean >= 1.0:
        return mean
    k = mdp.cost_model.concentration
    return rng.beta(k * mean, k * (1.0 - mean))


def sample_initial_state(mdp: SspMdp, rng: RngStream) -> int:
    return bisect_right(mdp._init_cdf, rng.random())


# -- JSON -----------------------------------------------------------------------

def mdp_to_dict(mdp: SspMdp) -> dict[str, Any]:
    return {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "transitions": mdp.transitions.tolist(),
        "mean_costs": mdp.mean_costs.tolist(),
        "cost_model": mdp.cost_model.to_dict(),
        "initial_dist": mdp.initial_dist.tolist(),
    }


def mdp_from_dict(raw: dict) -> SspMdp:
    return validate_mdp(raw)


def save_instance(mdp: SspMdp, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(mdp_to_dict(mdp), indent=1) + "\n")
    return path


def load_instance(path) -> SspMdp:
    return mdp_from_dict(json.loads(Path(path).read_text()))
