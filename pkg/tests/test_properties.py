"""Randomized invariants, 1000 cases each (see property_checks for the bodies)."""

import pytest

from property_checks import ALL_CHECKS

N_CASES = 1000


@pytest.mark.parametrize(
    "check", [fn for _, fn in ALL_CHECKS], ids=[name for name, _ in ALL_CHECKS]
)
def test_property(check):
    check(N_CASES)
