import numpy as np
import pytest

from sspreduce.mdp import validate_mdp

ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def make_ssp(P, c, mu=None, cost_model="bernoulli"):
    P = np.asarray(P, dtype=float)
    S, A = P.shape[0], P.shape[1]
    return validate_mdp({
        "num_states": S,
        "num_actions": A,
        "transitions": P,
        "mean_costs": np.asarray(c, dtype=float),
        "cost_model": cost_model,
        "initial_dist": mu,
    })


@pytest.fixture
def geometric_ssp():
    """One state, one action, reaches g w.p. 1/2, mean cost 1/2."""
    return make_ssp([[[0.5, 0.5]]], [[0.5]])


@pytest.fixture
def two_step_chain():
    """s1 -> s2 -> g deterministically with costs 0.2 then 0.3."""
    P = np.zeros((2, 1, 3))
    P[0, 0, 1] = 1.0
    P[1, 0, 2] = 1.0
    return make_ssp(P, [[0.2], [0.3]], cost_model="deterministic")
