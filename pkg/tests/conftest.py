import os

import pytest

from dualppln import waveguide

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-second computations")


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    os.environ["DUALPPLN_CACHE_DIR"] = str(tmp_path_factory.mktemp("mode-cache"))
    yield


@pytest.fixture
def design_geom():
    return waveguide.WaveguideGeometry()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL/INFO line per acceptance check."""

    def report(tag, passed, detail):
        status = "INFO" if passed is None else ("PASS" if passed else "FAIL")
        line = f"{status}  {tag}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report
