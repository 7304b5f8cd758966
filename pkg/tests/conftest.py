import json
import os

import pytest

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture(scope="session")
def oracles():
    """Pre-registered golden values produced by scripts/prerun_oracles.py."""
    with open(os.path.join(GOLDEN_DIR, "oracles.json")) as fh:
        return json.load(fh)
