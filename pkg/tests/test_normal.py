import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from blockfade.normal import norm_cdf, norm_ppf


def test_known_quantiles():
    assert norm_ppf(0.5) == 0.0
    assert norm_ppf(0.975) == pytest.approx(1.959963984540054, abs=1e-13)
    assert norm_ppf(0.05) == pytest.approx(-1.6448536269514722, abs=1e-13)


def test_endpoints_and_domain():
    assert norm_ppf(0.0) == -np.inf
    assert norm_ppf(1.0) == np.inf
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(ValueError):
            norm_ppf(bad)


def test_matches_scipy_on_grid():
    p = np.concatenate([np.logspace(-300, -1, 400), np.linspace(0.01, 0.99, 500), 1 - np.logspace(-15, -2, 100)])
    ours = norm_ppf(p)
    ref = stats.norm.ppf(p)
    np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-12)


def test_vector_shape_kept():
    out = norm_ppf(np.full((3, 2), 0.3))
    assert out.shape == (3, 2)
    assert isinstance(norm_ppf(0.3), float)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=1e-250, max_value=1 - 1e-12))
def test_roundtrip(p):
    z = norm_ppf(p)
    assert abs(norm_cdf(z) - p) <= 1e-12 * max(p, 1e-3)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=0.5))
def test_symmetry(p):
    # 1 - p is inexact below ~1e-6, which would swamp the comparison
    assert norm_ppf(p) == pytest.approx(-norm_ppf(1 - p), abs=1e-9)
