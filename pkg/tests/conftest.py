"""Shared fixtures.

The packaged reference scenarios are expensive to evaluate (the d = 4 one in
particular), so they are built once per session and shared between the unit
tests and the acceptance suite.  Each fixture records its wall-clock build
time; the acceptance tests fold that into their runtime budgets.
"""

import time

import numpy as np
import pytest

from eventloc.engine import evaluate_field
from eventloc.measures import density
from eventloc.scenario import load_scenario


class BuiltCase:
    """A built scenario plus its evaluated field and density."""

    def __init__(self, name: str):
        t0 = time.perf_counter()
        self.built = load_scenario(name).build()
        self.field = evaluate_field(self.built.state, self.built.kernel,
                                    self.built.domain)
        self.rho = density(self.field)
        self.build_seconds = time.perf_counter() - t0

    @property
    def state(self):
        return self.built.state

    @property
    def kernel(self):
        return self.built.kernel

    @property
    def domain(self):
        return self.built.domain


@pytest.fixture(scope="session")
def d1ref():
    return BuiltCase("d1_reference")


@pytest.fixture(scope="session")
def d2ref():
    return BuiltCase("d2_reference")


@pytest.fixture(scope="session")
def d4ref():
    return BuiltCase("d4_coarse")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
