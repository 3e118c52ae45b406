"""Shared fixtures: the two study batches are expensive, so compute them once."""

import pytest

from pinnet.harness import builtin_scenario, run_batch


@pytest.fixture(scope="session")
def single50_batch():
    sc = builtin_scenario("single-50")
    return sc, run_batch(sc, trials=30)


@pytest.fixture(scope="session")
def multi50_batch():
    sc = builtin_scenario("multi-50")
    return sc, run_batch(sc, trials=30)
