import math

import pytest

from blockfade import ChannelConfig, EnergyLaw, FadingLaw, solve_waterfill
from blockfade.dispersion import dispersion_set

PBAR_5DB = 10 ** 0.5


@pytest.fixture(scope="session")
def fig1():
    law = FadingLaw.from_sigma_h2(0.1)
    cfg = ChannelConfig(sigma_n2=4.0, nc=10, blocks=1000, eps=0.05)
    sol = solve_waterfill(law, 4.0, PBAR_5DB)
    return law, cfg, sol, dispersion_set(sol, cfg)


@pytest.fixture(scope="session")
def fig4():
    law = FadingLaw.from_sigma_h2(0.9)
    cfg = ChannelConfig(sigma_n2=0.4, nc=20, blocks=400, eps=0.1)
    energy = EnergyLaw.from_moments(17.0, 0.1)
    sol = solve_waterfill(law, 0.4, 17.0)
    return law, cfg, sol, energy, dispersion_set(sol, cfg, energy)


@pytest.fixture(scope="session")
def log2e_sq():
    return math.log2(math.e) ** 2


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one status line per acceptance criterion."""
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = {}
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
