import pytest

from pathlab.harness.scenario import resolve
from pathlab.topology import LinkType, Topology

ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sample8():
    return resolve("sample8")


@pytest.fixture(scope="session")
def sample8_topo(sample8):
    return sample8.topo


@pytest.fixture
def two_as():
    return Topology.build({"A": True, "B": False}, [("A", 1, "B", 1, LinkType.PROV_CUST)])
