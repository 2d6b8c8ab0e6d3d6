"""Shared fixtures: one default synthetic line per session.

Generating the full two-shift frame takes about a second, so tests that
only need a realistic frame share a single cached copy.  Tests that need
custom generator settings build their own inside the test.
"""

import pytest

from drawcast.synth import SynthConfig, generate_frame


@pytest.fixture(scope="session")
def default_synth():
    """Frame and ground truth for the stock generator configuration."""
    return generate_frame(SynthConfig())


@pytest.fixture(scope="session")
def default_frame(default_synth):
    return default_synth[0]


@pytest.fixture(scope="session")
def default_truth(default_synth):
    return default_synth[1]
