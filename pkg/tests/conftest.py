import numpy as np
import pytest

from evidence_sufficiency.config import Config, synthetic_config
from evidence_sufficiency.events import EventTable, MonitoringWindow


def make_window(
    index=0,
    start=0.0,
    end=30.0,
    *,
    n=200,
    n_features=4,
    seed=0,
    prevalence=0.2,
    delay=(0.0, 10.0),
    scores=None,
    features=None,
):
    """A labeled, scored window with uniform times in ``[start, end)``."""
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(start, end, n))
    y = (rng.random(n) < prevalence).astype(int)
    x = rng.standard_normal((n, n_features)) if features is None else np.asarray(features, dtype=float)
    s = rng.uniform(0.0, 1.0, n) if scores is None else np.asarray(scores, dtype=float)
    arrival = t + rng.uniform(*delay, n)
    ids = [f"w{index}-{i}" for i in range(n)]
    return MonitoringWindow(index, start, end, EventTable(ids, t, x, s, y, arrival))


@pytest.fixture
def default_cfg():
    return Config()


@pytest.fixture
def calibrated_config():
    return synthetic_config()


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
