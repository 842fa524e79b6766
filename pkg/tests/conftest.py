import numpy as np
import pytest

from noael import datasets
from noael.datamodel import AnimalRecord, DoseGroup, IncidenceDataset, ContinuousDataset


@pytest.fixture(scope="session")
def wes():
    return datasets.load("wes")


@pytest.fixture(scope="session")
def tamh():
    return datasets.load("tamh")


@pytest.fixture(scope="session")
def epi():
    return datasets.load("epi")


def make_continuous(groups_data, labels=None):
    labels = labels or [str(10 * i) for i in range(len(groups_data))]
    groups = [DoseGroup(lab, float(i * 10), i, len(g)) for i, (lab, g) in enumerate(zip(labels, groups_data))]
    return ContinuousDataset(tuple(groups), tuple(tuple(g) for g in groups_data))


def make_incidence(groups_data):
    """groups_data: list of lists of (time, status)."""
    groups = [DoseGroup(str(25 * i), float(25 * i), i, len(g)) for i, g in enumerate(groups_data)]
    animals = [tuple(AnimalRecord(float(t), int(s)) for t, s in g) for g in groups_data]
    return IncidenceDataset(tuple(groups), tuple(animals))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(criterion: str, checks: dict):
        failed = [name for name, ok in checks.items() if not ok]
        status = "FAIL" if failed else "PASS"
        detail = "; ".join(f"{name}: {'ok' if ok else 'MISS'}" for name, ok in checks.items())
        line = f"{status} {criterion} | {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert not failed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
