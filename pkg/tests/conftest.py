import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mpdse.calibration import default_calibration
from mpdse.dse import HardwareConstraints


@pytest.fixture(scope="session")
def calib():
    return default_calibration()


@pytest.fixture(scope="session")
def hwc():
    return HardwareConstraints()
