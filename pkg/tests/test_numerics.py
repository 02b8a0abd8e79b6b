import numpy as np
import pytest

from regtrace._numerics import mixed_close, neville_at_zero, richardson_halving


def test_mixed_close_uses_both_tolerances():
    assert mixed_close(1e-13, 0.0)
    assert mixed_close(1e9, 1e9 + 0.5)
    assert not mixed_close(1.0, 1.0 + 1e-6)


def test_richardson_removes_linear_and_quadratic_terms():
    h = 0.5 ** np.arange(5)
    vals = 3.0 + 2.0 * h - 5.0 * h**2
    assert richardson_halving(vals, order=1)[-1] == pytest.approx(3.0, abs=1e-12)


def test_neville_is_exact_for_polynomials():
    h = np.array([0.3, 0.2, 0.1, 0.05])
    vals = 1.5 - h + 4 * h**3
    assert neville_at_zero(h, vals)[-1] == pytest.approx(1.5, abs=1e-12)
