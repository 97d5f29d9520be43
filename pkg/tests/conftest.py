import pytest
import os
import sys
from pathlib import Path

# Add the project root to Python path for imports
project_root = str(Path(__file__).parent.parent)
sys.path.insert(0, project_root)

# Set test environment variables
os.environ["MODULARIS_LOG_LEVEL"] = "WARNING"
os.environ["MODULARIS_TOL"] = "1e-9"

from app.config import get_settings  # noqa: E402
from app.core.measure import StepFunction  # noqa: E402
from app.core.modular import Orlicz, PhiFunction  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings so monkeypatched env vars take effect"""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def l1():
    return Orlicz(PhiFunction.power(1.0))


@pytest.fixture
def l2():
    return Orlicz(PhiFunction.power(2.0))


@pytest.fixture
def chi():
    """chi(start, end, value) builds value * indicator of [start, end)"""
    return lambda start, end, value=1.0: StepFunction.indicator(start, end, value)
