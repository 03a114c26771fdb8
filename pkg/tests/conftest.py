import pytest

from lecam_euler.sde_core.models import make_model


@pytest.fixture
def tanh_cos():
    return make_model("tanh", {"A": 0.5}, "cos", {"c": 2.0, "d": 1.0})


@pytest.fixture
def sin_cos():
    return make_model("sin", {"A": 0.5}, "cos", {"c": 2.0, "d": 0.5})


@pytest.fixture
def brownian_model():
    return make_model("zero", {}, "constant", {"c": 1.0})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
