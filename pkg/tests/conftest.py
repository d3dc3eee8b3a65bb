"""Shared fixtures; the heavy flow runs are session-scoped so the unit
tests and the acceptance gate reuse the same solves."""

import numpy as np
import pytest

from hsflow import flow
from hsflow.surface import make_weight


@pytest.fixture(scope="session")
def flat_weight():
    return make_weight("flat")


@pytest.fixture(scope="session")
def quad_weight():
    """The extremal reproducing weight 2(1 - |z|^2)."""
    return make_weight("power", alpha=0.5, scale=2.0)


@pytest.fixture(scope="session")
def inv_weight():
    """The weight (1 - |z|^2)^(-1)."""
    return make_weight("power", alpha=-0.5, scale=1.0)


@pytest.fixture(scope="session")
def flat_flow_513(flat_weight):
    return flow.run_flow(flat_weight, [0.04, 0.16, 0.36, 0.64], 513)


@pytest.fixture(scope="session")
def quad_flow_513(quad_weight):
    return flow.run_flow(quad_weight, [0.04, 0.16, 0.36], 513)


@pytest.fixture(scope="session")
def inv_flow_513(inv_weight):
    return flow.run_flow(inv_weight, [0.04, 0.16, 0.36], 513)


@pytest.fixture(scope="session")
def flat_flow_257(flat_weight):
    return flow.run_flow(flat_weight, [0.16, 0.36], 257)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
