from functools import lru_cache

import pytest

from sonicbvp.profiles import parse_profile
from sonicbvp.solver import SolveOptions, continuation_solve


@lru_cache(maxsize=None)
def cached_solve(spec, alpha, N=400, scale=1.0):
    opts = SolveOptions(N=N, initial_amplitude_scale=scale)
    return continuation_solve(parse_profile(spec), alpha, opts)


@pytest.fixture(scope="session")
def solve():
    return cached_solve


@pytest.fixture(scope="session")
def ref_solution():
    """b = 2, alpha = 5 at the default resolution."""
    return cached_solve("constant:2.0", 5.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
