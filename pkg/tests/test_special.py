import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammainc

from inflowns.special import gammainc_lower


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0, 11.0, 25.0])
def test_matches_scipy_on_both_branches(a):
    x = np.concatenate([np.linspace(0.0, 3 * a + 40.0, 2001), [a + 1.0 - 1e-12, a + 1.0]])
    assert np.allclose(gammainc_lower(a, x), gammainc(a, x), rtol=1e-12, atol=1e-13)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.1, 40.0), st.floats(0.0, 200.0))
def test_property_against_scipy(a, x):
    assert gammainc_lower(a, x) == pytest.approx(gammainc(a, x), rel=1e-11, abs=1e-13)


def test_leading_series_term():
    # P(11, z) ~ z**11 / 11! for small z
    z = 0.01
    lead = z ** 11 / 39916800.0
    assert gammainc_lower(11.0, z) == pytest.approx(lead * (1 - 11 * z / 12), rel=1e-6)


def test_scalar_shape_and_limits():
    assert isinstance(gammainc_lower(11.0, 3.0), float)
    assert gammainc_lower(11.0, 0.0) == 0.0
    assert gammainc_lower(11.0, 1e4) == 1.0
    assert gammainc_lower(2.0, np.zeros((2, 3))).shape == (2, 3)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gammainc_lower(0.0, 1.0)
    with pytest.raises(ValueError):
        gammainc_lower(1.0, -1.0)
