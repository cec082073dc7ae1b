import sys
from pathlib import Path

import pytest

# Make tests/oracles.py importable regardless of how pytest was invoked.
sys.path.insert(0, str(Path(__file__).parent))

import uavnav.radio as radio


@pytest.fixture(autouse=True)
def _silence_hata_validity_warning():
    """The default grid sits far outside the canonical COST 231 box, so the
    one-time warning would otherwise fire mid-suite at an arbitrary test."""
    radio._validity_warned = True
    yield
