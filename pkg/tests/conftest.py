import numpy as np
import pytest

from hybridscale.catalog import InstanceCatalog, InstanceType, default_catalog
from hybridscale.trace import TimeSeries

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ec2():
    return default_catalog()


@pytest.fixture
def tiny_catalog():
    return InstanceCatalog((InstanceType("small", 100, "0.0500"), InstanceType("big", 300, "0.1200")))


def per_second(values, start=0):
    return TimeSeries(start, 1, np.asarray(values, dtype=float))


def write_trace(path, values, start=1_000):
    path.write_text("".join(f"{start + i},{int(v)}\n" for i, v in enumerate(values)))
    return path
