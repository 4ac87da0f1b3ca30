import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from heliosolve.solar_model import REFERENCE_ATMOSPHERE, synthetic_background  # noqa: E402


@pytest.fixture(scope="session")
def background():
    return synthetic_background(REFERENCE_ATMOSPHERE)
