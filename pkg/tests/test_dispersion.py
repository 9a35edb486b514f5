import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockfade import ChannelConfig, EnergyLaw, FadingLaw, solve_waterfill
from blockfade.dispersion import (
    LOG2E_SQ,
    dispersion_set,
    func_c,
    func_l,
    func_v,
    func_v1,
    snr_moments,
    v_bf_alpha,
)
from blockfade.errors import DomainError

# mpmath oracle (oracle_values.py), |H|^2 ~ Exp(2 sqrt(0.1)), sigma_n2 = 4, 5 dB
FIG1 = dict(
    var_c=0.713663675532404,
    el=0.287671682252731,
    el2=0.178341668950311,
    var_l=0.0955866721801947,
    ev=0.397001695555151,
    v_bf=8.16189490433257,
)
FIG1_V_ALPHA = {0.1: 0.624206261134535, 0.5: 4.07470157477238}
# |H|^2 ~ Exp(2 sqrt(0.9)), sigma_n2 = 0.4, pbar = 17
FIG4 = dict(
    lam=18.0282285583643,
    var_c=3.18691727886391,
    el=0.942965635528996,
    el2=0.908583817100204,
    var_l=0.0193996273116008,
)


def test_scalar_functionals():
    assert func_c(1.0) == 1.0
    assert func_l(1.0) == 0.5
    assert func_v(1.0) == 0.75
    assert func_c(0.0) == func_l(0.0) == func_v(0.0) == 0.0
    assert func_v1(1.0, 0.1, 2.0) == pytest.approx(0.275)


def test_v_is_one_minus_square():
    x = np.logspace(-6, 6, 2001)
    np.testing.assert_allclose(func_v(x), 1 - (1 - func_l(x)) ** 2, rtol=1e-12, atol=1e-15)
    assert np.all(func_v(x) >= func_l(x))


def test_fig1_moments(fig1):
    disp = fig1[3]
    m = disp.moments
    assert m.var_c == pytest.approx(FIG1["var_c"], rel=1e-8)
    assert m.mean_l == pytest.approx(FIG1["el"], rel=1e-9)
    assert m.mean_l2 == pytest.approx(FIG1["el2"], rel=1e-9)
    assert m.var_l == pytest.approx(FIG1["var_l"], rel=1e-8)
    assert m.mean_v == pytest.approx(FIG1["ev"], rel=1e-9)
    assert disp.v_bf == pytest.approx(FIG1["v_bf"], rel=1e-9)


def test_fig4_energy_constants(fig4):
    disp = fig4[4]
    v_prime = LOG2E_SQ * (FIG4["el"] + FIG4["var_l"]) + 20 * FIG4["var_c"]
    v_dprime = LOG2E_SQ * (FIG4["el2"] + 0.1 / FIG4["lam"] ** 2 + FIG4["var_l"]) + 20 * FIG4["var_c"]
    assert disp.v_ef_prime == pytest.approx(v_prime, rel=1e-9)
    assert disp.v_bf_prime == disp.v_ef_prime
    assert disp.v_ef_dprime == pytest.approx(v_dprime, rel=1e-9)
    assert disp.components["mean_V1"] == pytest.approx(FIG4["el2"] + 0.1 / FIG4["lam"] ** 2, rel=1e-9)


def test_constant_channel():
    sol = solve_waterfill(FadingLaw.point(1.0), 1.0, 1.0)
    disp = dispersion_set(sol, ChannelConfig(1.0, 10, 100, 0.05))
    # water level 2 gives received SNR 1
    assert disp.v_bf == pytest.approx(0.75 * LOG2E_SQ, rel=1e-15)
    assert disp.v_bf_prime == pytest.approx(0.5 * LOG2E_SQ, rel=1e-15)
    assert disp.moments.var_c == 0.0
    assert disp.moments.var_l == 0.0
    assert disp.v_ef_dprime is None


def test_no_energy_law_means_no_dprime(fig1):
    assert fig1[3].v_ef_dprime is None
    assert "mean_V1" not in fig1[3].components


def test_v_bf_alpha_endpoints(fig1):
    _, cfg, sol, disp = fig1
    assert v_bf_alpha(sol, cfg, 0.0) == 0.0
    assert v_bf_alpha(sol, cfg, 1.0) == pytest.approx(disp.v_bf, rel=1e-12)
    for a, ref in FIG1_V_ALPHA.items():
        assert v_bf_alpha(sol, cfg, a) == pytest.approx(ref, rel=1e-8)
    with pytest.raises(DomainError):
        v_bf_alpha(sol, cfg, 1.5)


def test_v_bf_alpha_grows_with_alpha(fig1):
    # scaling the SNR up raises the dispersion on this fixture
    _, cfg, sol, _ = fig1
    vals = [v_bf_alpha(sol, cfg, a) for a in np.linspace(0.1, 1.0, 10)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_moments_match_monte_carlo(fig1):
    law, _, sol, disp = fig1
    rng = np.random.default_rng(11)
    s = sol.effective_snr(rng.exponential(law.mean_gain, 1_000_000))
    c, l = np.log2(1 + s), s / (1 + s)
    se = lambda x: x.std() / math.sqrt(x.size)  # noqa: E731
    assert abs(c.mean() - sol.capacity) < 4 * se(c)
    assert abs(l.mean() - disp.moments.mean_l) < 4 * se(l)
    assert abs(func_v(s).mean() - disp.moments.mean_v) < 4 * se(func_v(s))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0), st.floats(0.1, 30.0), st.integers(1, 50), st.floats(0.0, 1.0))
def test_constants_nonnegative_and_ordered(mean, s2, pbar, nc, se2):
    sol = solve_waterfill(FadingLaw.rayleigh(mean), s2, pbar)
    energy = EnergyLaw.from_moments(pbar, min(se2, pbar ** 2 / 3))
    disp = dispersion_set(sol, ChannelConfig(s2, nc, 10, 0.1), energy)
    for v in (disp.v_bf, disp.v_bf_prime, disp.v_ef_prime, disp.v_ef_dprime):
        assert math.isfinite(v) and v >= 0
    assert disp.v_bf >= disp.v_bf_prime


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100.0))
def test_point_mass_reduces_to_awgn(g):
    law = FadingLaw.point(g)
    m = snr_moments(law, lambda x: x)
    assert m.var_c == 0.0 and m.var_l == 0.0
    assert m.v_eq5(7) == pytest.approx(LOG2E_SQ * func_v(g), rel=1e-14)
