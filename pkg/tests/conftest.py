"""Shared fixtures for the tbs-noma tests."""

import pytest

from tbs_noma.analytic import table1_coeffs
from tbs_noma.validation import EQUAL_GAINS, STRONG_FAR_LINKS, STRONG_RELAY


@pytest.fixture
def equal_gains():
    """All links 0 dB, a1 = 0.1, mode 1."""
    return EQUAL_GAINS


@pytest.fixture
def strong_relay():
    """Source-relay and relay links 10 dB above the direct link, a1 = 0.2."""
    return STRONG_RELAY


@pytest.fixture
def strong_far_links():
    """Mode 3, a1 = 0.2, links towards the far user 10 dB stronger."""
    return STRONG_FAR_LINKS


@pytest.fixture
def mode1_coeffs():
    return table1_coeffs(1, 0.1, 0.9)
