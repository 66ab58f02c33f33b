import sys
from pathlib import Path

import pytest

# Add engine and the CLI script to path
sys.path.insert(0, str(Path(__file__).parent.parent / "engine"))
sys.path.insert(0, str(Path(__file__).parent.parent))

from app import events  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_events():
    """Each test starts and ends with no subscribers."""
    events.event_subscribers.clear()
    yield
    events.event_subscribers.clear()


@pytest.fixture
def ledger_url(tmp_path):
    return f"sqlite:///{tmp_path / 'ledger.db'}"


@pytest.fixture
def recorded_events():
    seen = []
    events.subscribe(seen.append)
    return seen
