import numpy as np
import pytest

from dtle_net import _backend

BACKENDS = ["python"] + (["compiled"] if _backend.compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    module = _backend.fallback if request.param == "python" else _backend.compiled
    monkeypatch.setattr(_backend, "kernels", module)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria register here and are listed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
