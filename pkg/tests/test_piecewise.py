import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regtrace.piecewise import PiecewisePoly

coef = st.floats(-3, 3, allow_nan=False)


def test_evaluation_is_half_open_and_zero_outside():
    f = PiecewisePoly(((0.0, 1.0, (1.0, -2.0, 1.0)), (1.0, 2.0, (5.0,))))
    assert f(np.array([0.0, 0.5, 1.0, 1.999, 2.0, 7.0])).tolist() == [1.0, 0.25, 5.0, 5.0, 0.0, 0.0]


def test_integral_and_right_limit():
    f = PiecewisePoly(((0.0, 1.0, (1.0, -2.0, 1.0)),))
    assert f.integral() == pytest.approx(1 / 3)
    assert f.right_limit_at_zero() == 1.0
    assert PiecewisePoly(((0.5, 1.0, (2.0,)),)).right_limit_at_zero() == 0.0
    assert PiecewisePoly.polynomial([1.0]).integral() == np.inf


def test_rejects_overlap_and_negative_support():
    with pytest.raises(ValueError):
        PiecewisePoly(((0.0, 2.0, (1.0,)), (1.0, 3.0, (1.0,))))
    with pytest.raises(ValueError):
        PiecewisePoly(((-1.0, 1.0, (1.0,)),))


def test_growth_detection():
    assert PiecewisePoly.polynomial([0.0, 0.0, 1.0]).grows_at_infinity()
    assert not PiecewisePoly.polynomial([1.0]).grows_at_infinity()
    assert not PiecewisePoly(((0.0, 5.0, (0.0, 1.0)),)).grows_at_infinity()


@given(st.lists(coef, min_size=1, max_size=4), st.lists(coef, min_size=1, max_size=4),
       st.floats(0.1, 3.0))
def test_sum_matches_pointwise_sum(c1, c2, cut):
    f = PiecewisePoly(((0.0, cut, tuple(c1)),))
    g = PiecewisePoly(((0.0, np.inf, tuple(c2)),))
    x = np.linspace(0, 5, 101)
    np.testing.assert_allclose((f + g)(x), f(x) + g(x), atol=1e-9)
