import functools

import numpy as np
import pytest

from tesh import aspurity


@functools.lru_cache(maxsize=None)
def cached_upper_bound(m, level):
    """Each (m, level) relaxation is solved once per test session."""
    return aspurity.upper_bound(m, level)


@functools.lru_cache(maxsize=None)
def cached_oracle(m):
    return aspurity.oracle_max_purity(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
