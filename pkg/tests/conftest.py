import numpy as np
import pytest
from hypothesis import strategies as st

from isoplane.moduli import CubicModuli

# pass/fail lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

FLAGSHIP = CubicModuli(7.645e9, 5.901e9, 0.626e9)
# mu* = 0.1 mu, lam = 0.29 mu
FIGURE = CubicModuli.from_lame(0.29, 1.0, 0.1)


def random_material(rng: np.random.Generator) -> CubicModuli:
    """Log-uniform moduli over four decades of contrast."""
    kappa, mu, mu_star = 10.0 ** rng.uniform(-2, 2, size=3)
    return CubicModuli(kappa, mu, mu_star)


def moduli_strategy():
    pos = st.floats(min_value=1e-2, max_value=1e2, allow_nan=False, allow_infinity=False)
    return st.builds(CubicModuli, pos, pos, pos)


def cubic_strategy(min_rel_gap=1e-3):
    """Materials whose mu_star stays away from mu (non-degenerate roots)."""
    return moduli_strategy().filter(lambda m: abs(m.mu_star - m.mu) > min_rel_gap * m.mu)


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
