import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jmfbm import ModelParams  # noqa: E402


@pytest.fixture
def jump_params():
    return ModelParams(r=0.05, sigma=0.2, hurst=0.7, lam=1.0, k=-0.1, sigma_j=0.25)


@pytest.fixture
def fixtures_dir():
    return Path(__file__).parent / "fixtures"


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.format_results():
        terminalreporter.write_line(line)
