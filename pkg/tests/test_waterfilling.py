import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockfade import ChannelConfig, FadingLaw, expect, p_wf, solve_waterfill, tci_rate
from blockfade.dispersion import func_l
from blockfade.errors import DivergentInversion, DomainError, NoMass
from blockfade.waterfilling import tci_best_rate, tci_inversion_moment

# mpmath E1 closed forms, see oracle_values.py
FIG1_LAMBDA = 10.9926623135266
FIG1_CAPACITY = 0.689171613633895
FIG1_VARIANCE_CONV_CAPACITY = 0.204441098615983
FIG4_LAMBDA = 18.0282285583643
FIG4_CAPACITY = 5.60218750701848
FIG1_TCI_BEST = 0.630426523809525  # same 512-point outage grid


def test_fig1_fixture(fig1):
    _, _, sol, _ = fig1
    assert sol.lam == pytest.approx(FIG1_LAMBDA, rel=1e-9)
    assert sol.capacity == pytest.approx(FIG1_CAPACITY, rel=1e-9)


def test_fig4_fixture(fig4):
    sol = fig4[2]
    assert sol.lam == pytest.approx(FIG4_LAMBDA, rel=1e-9)
    assert sol.capacity == pytest.approx(FIG4_CAPACITY, rel=1e-9)


def test_variance_convention_value():
    sol = solve_waterfill(FadingLaw.from_sigma_h2(0.1, "variance"), 4.0, 10 ** 0.5)
    assert sol.capacity == pytest.approx(FIG1_VARIANCE_CONV_CAPACITY, rel=1e-9)


def test_constant_channel_is_awgn():
    sol = solve_waterfill(FadingLaw.point(1.0), 1.0, 1.0)
    assert sol.lam == 2.0
    assert sol.capacity == 1.0


def test_discrete_two_active_states():
    sol = solve_waterfill(FadingLaw.discrete([0.0, 1.0, 3.0], [0.2, 0.3, 0.5]), 1.0, 2.0)
    lam = (2.0 + 0.3 + 0.5 / 3) / 0.8
    assert sol.lam == pytest.approx(lam, rel=1e-13)
    assert sol.capacity == pytest.approx(0.3 * math.log2(lam) + 0.5 * math.log2(3 * lam), rel=1e-13)


def test_discrete_inactive_state():
    # weak state below the threshold gets no power
    law = FadingLaw.discrete([0.01, 1.0], [0.5, 0.5])
    sol = solve_waterfill(law, 1.0, 1.0)
    assert sol.lam == pytest.approx(3.0)
    assert p_wf(sol, 0.01) == 0.0


def test_power_constraint_met(fig1):
    law, _, sol, _ = fig1
    used = expect(law, lambda x: p_wf(sol, x), lower=sol.threshold)
    assert used == pytest.approx(sol.pbar, rel=1e-9)


def test_p_wf_zero_gain():
    sol = solve_waterfill(FadingLaw.rayleigh(1.0), 1.0, 1.0)
    np.testing.assert_array_equal(p_wf(sol, np.array([0.0, sol.threshold])), [0.0, 0.0])
    assert sol.effective_snr(0.0) == 0.0


def test_errors():
    with pytest.raises(NoMass):
        solve_waterfill(FadingLaw.point(0.0), 1.0, 1.0)
    with pytest.raises(DomainError):
        solve_waterfill(FadingLaw.rayleigh(1.0), 1.0, 0.0)
    with pytest.raises(DomainError):
        solve_waterfill(FadingLaw.rayleigh(1.0), -1.0, 1.0)
    with pytest.raises(DomainError):
        ChannelConfig(1.0, 10, 10, 0.5)
    with pytest.raises(DomainError):
        ChannelConfig(1.0, 0, 10, 0.1)


def test_blocklength():
    assert ChannelConfig(1.0, 20, 400, 0.1).n == 8000


def test_runtime_fig1():
    import time

    t = time.perf_counter()
    solve_waterfill(FadingLaw.from_sigma_h2(0.1), 4.0, 10 ** 0.5)
    assert time.perf_counter() - t < 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0), st.floats(0.1, 30.0))
def test_capacity_increases_with_power(mean, s2, pbar):
    law = FadingLaw.rayleigh(mean)
    c1 = solve_waterfill(law, s2, pbar).capacity
    c2 = solve_waterfill(law, s2, pbar * 1.5).capacity
    assert c2 > c1 > 0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0), st.floats(0.1, 30.0))
def test_l_identity(mean, s2, pbar):
    sol = solve_waterfill(FadingLaw.rayleigh(mean), s2, pbar)
    g = np.linspace(sol.threshold * 1.0001, sol.threshold * 50, 1000)
    np.testing.assert_allclose(func_l(sol.effective_snr(g)), p_wf(sol, g) / sol.lam, rtol=0, atol=1e-12)


def test_tci_constant_channel():
    law = FadingLaw.point(2.0)
    assert tci_rate(law, 1.0, 3.0, 0.0) == pytest.approx(math.log2(1 + 6.0))


def test_tci_full_inversion_of_rayleigh_is_zero():
    law = FadingLaw.rayleigh(1.0)
    assert tci_rate(law, 1.0, 1.0, 0.0) == 0.0
    with pytest.raises(DivergentInversion):
        tci_inversion_moment(law, 0.0)
    with pytest.raises(DivergentInversion):
        tci_inversion_moment(FadingLaw.discrete([0.0, 1.0], [0.5, 0.5]), 0.0)


def test_tci_discrete_skips_zero_state():
    law = FadingLaw.discrete([0.0, 1.0], [0.25, 0.75])
    # silence the zero state, invert the other
    assert tci_rate(law, 1.0, 3.0, 0.25) == pytest.approx(0.75 * math.log2(1 + 4.0))


def test_tci_below_capacity(fig1):
    law, _, sol, _ = fig1
    best = tci_best_rate(law, 4.0, sol.pbar)
    assert 0 < best < sol.capacity
    assert best == pytest.approx(FIG1_TCI_BEST, rel=1e-9)
