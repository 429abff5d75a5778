import math

import pytest

from curvlab.catalog import load_chart
from curvlab.geometry import MetricChart

TAU = 2 * math.pi


@pytest.fixture(scope="session")
def sphere2():
    return load_chart("sphere2")


@pytest.fixture(scope="session")
def disc():
    return load_chart("disc")


@pytest.fixture(scope="session")
def flat_box():
    return MetricChart.from_entries(("x", "y"), ((0.0, 1.0), (0.0, 1.0)), {(1, 1): "1", (2, 2): "1"}, (1, 1),
                                    name="box")


def sphere_chart(radius: float = 1.0) -> MetricChart:
    r2 = radius * radius
    return MetricChart.from_entries(("th", "ph"), ((0.0, math.pi), (0.0, TAU)),
                                    {(1, 1): f"{r2!r}", (2, 2): f"{r2!r}*sin(th)^2"}, (1, 1), name=f"sphere-r{radius}")


def round_sphere(m: int) -> MetricChart:
    """Unit S^m in nested polar coordinates."""
    names = tuple(f"x{i}" for i in range(1, m + 1))
    entries = {}
    factor = "1"
    for i in range(1, m + 1):
        entries[(i, i)] = factor
        factor = f"sin(x{i})^2" if i == 1 else f"{factor}*sin(x{i})^2"
    domain = tuple((0.0, math.pi) for _ in range(m - 1)) + ((0.0, TAU),)
    return MetricChart.from_entries(names, domain, entries, (1,) * m, name=f"S{m}")


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> str:
    """Store (and print) the single summary line of an acceptance criterion."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
