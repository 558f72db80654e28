import numpy as np
import pytest

# Acceptance tests register one line each; the summary hook prints them
# after the run so they are visible even when pytest captures stdout.
_ACCEPTANCE_LINES: list[str] = []


def acceptance_report(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_numba():
    """Compile the jitted kernels once so time budgets measure the
    algorithms, not JIT compilation."""
    from eegtda.homology import build_filtration, persistence
    from eegtda.svm import LINEAR, train_svc

    rng = np.random.default_rng(0)
    persistence(build_filtration(rng.standard_normal((8, 3))))
    x = np.vstack([rng.standard_normal((4, 2)) + 4, rng.standard_normal((4, 2)) - 4])
    y = np.array([1.0] * 4 + [-1.0] * 4)
    train_svc(x, y, kernel=LINEAR, c=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
