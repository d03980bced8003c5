import functools
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dnlsq.core import SystemParams  # noqa: E402
from dnlsq.experiments import simulate  # noqa: E402
from dnlsq.soliton import find_soliton  # noqa: E402

# Reference run: twisted soliton, omega=10, L=0.01.
REFERENCE = SystemParams(omega=10.0, quantum_scale=0.01, z_max=1.5, step=1e-3)


# wall time of the first (uncached) computation of each reference_run
RUN_SECONDS = {}

# (criterion, passed, description) lines collected by the acceptance suite
ACCEPTANCE = []


@functools.lru_cache(maxsize=None)
def reference_run(kind="twisted", gamma=0.0, L=0.01, validity=True, stride=10):
    """Cached propagation shared by the slow tests (about 30 s each)."""
    t0 = time.perf_counter()
    params = REFERENCE.with_(absorption=gamma, quantum_scale=L)
    prof = find_soliton(kind, params)
    res = simulate(prof, params, output_stride=stride, validity=validity)
    RUN_SECONDS[(kind, gamma, L, validity, stride)] = time.perf_counter() - t0
    return res


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def reference_params():
    return REFERENCE


@pytest.fixture(scope="session")
def run_cache():
    return reference_run
