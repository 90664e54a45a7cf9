import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mesh_points(rng, n):
    """Sorted points in (0, 1) with well separated neighbours."""
    while True:
        x = np.sort(rng.random(n))
        if np.all(np.diff(np.concatenate(([0.0], x, [1.0]))) > 1e-6):
            return x


# -- acceptance summary -----------------------------------------------------
# test_acceptance.py records one entry per checked part; the hook below
# prints one PASS/FAIL line per criterion after the run.

ACCEPTANCE = {}


def record(criterion, part, passed, detail):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}{part}: {detail}"
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in parts)
        details = "; ".join(f"{name or 'result'}: {'ok' if p else 'FAILED'} ({d})"
                            for name, p, d in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {crit:>2}  {details}")
