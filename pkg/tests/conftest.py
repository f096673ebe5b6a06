import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sgnpoly import _accel
from sgnpoly.graph import AdjacencyMatrix

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

BACKENDS = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    with _accel.backend(request.param):
        yield request.param


def random_graph(rng, n, density=None):
    if density is None:
        density = rng.uniform(0.1, 0.9)
    upper = np.triu(rng.random((n, n)) < density, 1)
    return AdjacencyMatrix.from_dense(upper | upper.T)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def acceptance():
    def record(criterion: int, check: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
        print(f"[criterion {criterion}] {check}: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[crit]
        ok = all(passed for _, passed, _ in checks)
        parts = "; ".join(f"{name}={'ok' if p else 'FAILED'} ({d})" for name, p, d in checks)
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'} | {parts}")
