import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gnls.branch import find_xi_c, reconstruct_profile  # noqa: E402
from gnls.envelope import compute_diagram  # noqa: E402
from gnls.nonlinearity import preset  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"

# criterion id -> list of (label, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record(request):
    """record(criterion, label, passed, detail) for the acceptance summary."""

    def _rec(n: int, label: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE.setdefault(n, []).append((label, bool(passed), detail))

    return _rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for label, p, detail in parts:
            tr.write_line(f"    [{'pass' if p else 'FAIL'}] {label}: {detail}")


@pytest.fixture(scope="session")
def gp():
    return preset("gp")


@pytest.fixture(scope="session")
def gp_profile_05(gp):
    return reconstruct_profile(gp, 0.5, find_xi_c(gp, 0.5))


@pytest.fixture(scope="session")
def diagrams():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = compute_diagram(preset(name))
        return cache[name]

    return get
