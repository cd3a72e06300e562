import pytest
from hypothesis import HealthCheck, settings

from gbmpaths.kernel_functions import preset

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")


@pytest.fixture(scope="session", params=["wiener", "drifted", "curved"])
def kp_fine(request):
    return preset(request.param, M=4096)


@pytest.fixture(scope="session")
def drifted():
    return preset("drifted", M=256)


@pytest.fixture(scope="session")
def wiener():
    return preset("wiener", M=256)


@pytest.fixture(scope="session")
def curved():
    return preset("curved", M=256)


ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance criterion outcome for the terminal summary."""

    def rec(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE.append((number, bool(passed), detail))
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
