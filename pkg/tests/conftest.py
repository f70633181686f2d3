import numpy as np
import pytest

from gridid.measurement import generate_load_profiles, synthesize_dataset
from gridid.network import Branch, Bus, NetworkModel, build_admittance, ieee33

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def two_bus(y_line=1 - 2j, load_p=10.0, load_q=5.0, shunt_b=0.0) -> NetworkModel:
    """Slack plus one load bus; ``load_*`` in MW on a 100 MVA base."""
    z = 1 / y_line
    return NetworkModel(
        [Bus(1, "slack", shunt_b=shunt_b), Bus(2, "PQ", load_p, load_q)],
        [Branch(1, 2, z.real, z.imag)],
        base_power=100.0,
        base_voltage=1.0,
        name="two-bus",
    )


def radial(n: int = 6, seed: int = 0) -> NetworkModel:
    """Random radial feeder with moderate impedances and loads (base 10 MVA)."""
    rng = np.random.default_rng(seed)
    buses = [Bus(1, "slack")] + [
        Bus(h, "PQ", float(rng.uniform(0.05, 0.3)), float(rng.uniform(0.02, 0.15))) for h in range(2, n + 1)
    ]
    branches = [
        Branch(int(rng.integers(1, h)), h, float(rng.uniform(0.005, 0.03)), float(rng.uniform(0.005, 0.03)))
        for h in range(2, n + 1)
    ]
    return NetworkModel(buses, branches, base_power=10.0, base_voltage=12.66, name=f"radial{n}")


@pytest.fixture(scope="session")
def net33():
    return ieee33()


@pytest.fixture(scope="session")
def y33(net33):
    return build_admittance(net33).y


@pytest.fixture(scope="session")
def profiles33(net33):
    return generate_load_profiles(net33, 1440, 0.2, seed=1)


@pytest.fixture(scope="session")
def truth33(net33, profiles33):
    return synthesize_dataset(net33, profiles33)


@pytest.fixture(scope="session")
def net6():
    return radial(6, seed=3)


@pytest.fixture(scope="session")
def truth6(net6):
    return synthesize_dataset(net6, generate_load_profiles(net6, 400, 0.2, seed=5))
