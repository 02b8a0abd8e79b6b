import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regtrace.bc_algebra import BoundarySpec, build_frame, characteristic_data, trace_PB_closed
from regtrace.green_kernel import (
    ArcSpec,
    LadderNotConverged,
    NearZeroDelta,
    contour_trace_integrand,
    free_diag,
    g_function,
    g_integral,
    g_integral_exact,
    g_integral_ladder,
    h0_diag,
    min_abs_delta_on_arc,
    weyl_arc_integral,
)


def setup(m, K, polys=None):
    spec = BoundarySpec.one_term(K, m) if polys is None else BoundarySpec(m, polys)
    frame = build_frame(m, spec.degrees)
    return characteristic_data(spec, frame), frame


def dirichlet_resolvent(x, zeta):
    # kernel of (-D^2 - zeta^2)^{-1} with y(0) = 0 on the diagonal, s = -i zeta
    s = -1j * zeta
    return (1 - np.exp(-2 * s * x)) / (2 * s)


# Weyl term

@pytest.mark.parametrize("m,lam,value", [(1, 16.0, 4 / np.pi), (2, 81.0, 3 / np.pi)])
def test_weyl_examples(m, lam, value):
    assert weyl_arc_integral(m, lam) == pytest.approx(value, rel=1e-10)


@given(st.integers(1, 5), st.floats(1.0, 1e6))
def test_weyl_routes_and_homogeneity(m, lam):
    a = weyl_arc_integral(m, lam)
    assert weyl_arc_integral(m, lam, route="circle") == pytest.approx(a, rel=1e-9)
    assert weyl_arc_integral(m, 2 * lam) == pytest.approx(2 ** (1 / (2 * m)) * a, rel=1e-9)


def test_weyl_rejects_bad_input():
    with pytest.raises(ValueError):
        weyl_arc_integral(1, -1.0)
    with pytest.raises(ValueError):
        weyl_arc_integral(1, 4.0, route="spiral")


def test_arc_spec():
    arc = ArcSpec(16.0, 2)
    assert arc.radius == pytest.approx(2.0)
    assert arc.tau(np.pi / 4) == pytest.approx(16.0 * np.exp(1j * np.pi))


# the Green-function diagonal

def test_dirichlet_vanishes_at_boundary():
    char, frame = setup(1, (0,))
    assert abs(h0_diag(char, frame, 0.0, 1.3 + 0.4j)) < 1e-15


def test_dirichlet_negative_tau_oracle():
    char, frame = setup(1, (0,))
    for s in (0.5, 2.0, 7.0):
        for x in (0.1, 1.0, 3.0):
            expected = (1 - np.exp(-2 * s * x)) / (2 * s)
            assert h0_diag(char, frame, x, 1j * s) == pytest.approx(expected, rel=1e-12)


def test_dirichlet_resolvent_oracle_on_sector():
    char, frame = setup(1, (0,))
    rng = np.random.default_rng(11)
    for _ in range(20):
        zeta = rng.uniform(0.2, 10) * np.exp(1j * rng.uniform(0.05, np.pi - 0.05))
        x = rng.uniform(0, 5)
        h = h0_diag(char, frame, x, zeta)
        ref = dirichlet_resolvent(x, zeta)
        assert abs(h - ref) <= 1e-10 * abs(ref)


@pytest.mark.parametrize("m,K", [(1, (1,)), (2, (0, 1)), (2, (1, 3)), (3, (0, 1, 2))])
def test_diagonal_approaches_free_term_exponentially(m, K):
    char, frame = setup(m, K)
    zeta = 3.0 * np.exp(1j * np.pi / (2 * m))
    zp = frame.zpow[:m]
    # slowest decay rate among exp(i (z^(a-1) + z^(b-1)) x zeta) on this ray
    rate = np.min(np.imag((zp[:, None] + zp[None, :]) * zeta))
    assert rate > 0
    ratio = np.abs(char.delta_ratio(zeta)).sum()
    bound_scale = ratio / (2 * m * abs(zeta) ** (2 * m - 1))
    for x in (0.5, 1.0, 2.0, 4.0):
        diff = abs(h0_diag(char, frame, x, zeta) - free_diag(frame, zeta))
        assert diff <= bound_scale * np.exp(-rate * x) * (1 + 1e-9)


def test_near_zero_delta_is_signalled():
    # P(D) = D + 1: Delta(zeta) = 1 + i zeta vanishes at zeta = i
    char, frame = setup(1, (1,), polys=((1.0, 1.0),))
    with pytest.raises(NearZeroDelta):
        h0_diag(char, frame, 0.5, 1j)
    with pytest.raises(NearZeroDelta):
        contour_trace_integrand(char, frame, 0.5, 1.0)
    assert min_abs_delta_on_arc(char, frame, 1.0, samples=513) < 1e-12


def test_sector_is_enforced():
    char, frame = setup(2, (0, 1))
    with pytest.raises(ValueError):
        h0_diag(char, frame, 0.5, -1.0 + 0.1j)


# g(y) and its regularized integral

def test_g_at_zero_m1_dirichlet():
    char, frame = setup(1, (0,))
    assert g_function(char, frame, 0.0) == pytest.approx(-2j, abs=1e-14)


@pytest.mark.parametrize("m,K", [(1, (0,)), (2, (0, 3)), (3, (1, 2, 4))])
def test_g_is_continuous_across_series_cutoff(m, K):
    char, frame = setup(m, K)
    ys = np.array([0.0, 1e-8, 9.99e-5, 1.0001e-4, 1e-3])
    g = g_function(char, frame, ys)
    assert np.all(np.abs(np.diff(g)) < 1e-2 * np.max(np.abs(g)) + 1e-12)
    assert abs(g[2] - g[3]) < 1e-6


@pytest.mark.parametrize("m,K", [(1, (1,)), (2, (0, 1)), (3, (0, 1, 2))])
def test_g_decay_bound(m, K):
    char, frame = setup(m, K)
    C = 2 * np.abs(char.Pmat.T * char.Bmat).sum()
    y = np.linspace(1, 200, 4001)
    assert np.all(np.abs(g_function(char, frame, y)) <= C / y + 1e-12)


@pytest.mark.parametrize("m,K,target", [
    (1, (0,), -0.5j * np.pi), (2, (0, 3), 0.0), (2, (0, 1), -1j * np.pi),
])
def test_g_integral_examples(m, K, target):
    char, frame = setup(m, K)
    assert abs(g_integral(char, frame) - target) <= 1e-2 * max(abs(target), 1.0)
    # closed form of the damped integral at eps = 0
    assert abs(g_integral_exact(char, frame) - target) <= 1e-12


@pytest.mark.parametrize("m", [1, 2, 3])
def test_damped_quadrature_matches_closed_form(m):
    for K in [tuple(range(m)), tuple(range(m, 2 * m))]:
        char, frame = setup(m, K)
        ladder = g_integral_ladder(char, frame)
        exact = np.array([g_integral_exact(char, frame, e) for e in ladder.eps])
        np.testing.assert_allclose(ladder.values, exact, atol=1e-10)
        target = -1j * np.pi / m * float(trace_PB_closed(m, K))
        errs = np.abs(ladder.values - target)
        assert np.all(np.diff(errs) < 0)


def test_ladder_checks():
    char, frame = setup(1, (0,))
    with pytest.raises(ValueError):
        g_integral_ladder(char, frame, (0.2, 0.15))
    with pytest.raises(LadderNotConverged):
        g_integral_ladder(char, frame, (0.2, 0.1), tol=1e-12)


# contour integrand of the trace formula

@pytest.mark.parametrize("lam", [16.0, 100.0])
def test_contour_m1_dirichlet_at_origin(lam):
    char, frame = setup(1, (0,))
    # constant integrand 1 along the arc: sqrt(lam) * (z - 1) with z = -1
    assert contour_trace_integrand(char, frame, 0.0, lam) == pytest.approx(-2 * np.sqrt(lam), rel=1e-10)


@pytest.mark.parametrize("m,K", [(1, (1,)), (2, (0, 1)), (2, (2, 3)), (3, (3, 4, 5))])
def test_one_term_ratio_equals_limit(m, K):
    char, frame = setup(m, K)
    for lam in (1e2, 1e3, 1e4):
        a = contour_trace_integrand(char, frame, 1.0, lam)
        b = contour_trace_integrand(char, frame, 1.0, lam, use_limit=True)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


@pytest.mark.parametrize("m,polys", [
    (1, ((0.5, 1.0),)),
    (2, ((1.0,), (0.0, 0.5, 0.0, 1.0))),
    (3, ((1.0,), (0.5, 1.0), (0.0, 0.0, 0.5, 0.0, 0.0, 1.0))),
])
def test_perturbed_ratio_difference_decays(m, polys):
    char, frame = setup(m, None, polys=polys)
    diffs = []
    for lam in (1e2, 1e4, 1e6):
        a = contour_trace_integrand(char, frame, 1.0, lam)
        b = contour_trace_integrand(char, frame, 1.0, lam, use_limit=True)
        diffs.append(abs(a - b))
    assert diffs[0] > diffs[1] > diffs[2]


def test_perturbed_difference_bounded_in_x():
    char, frame = setup(2, None, polys=((1.0,), (0.0, 0.5, 0.0, 1.0)))
    for lam in (1e2, 1e4):
        d = [abs(contour_trace_integrand(char, frame, x, lam)
                 - contour_trace_integrand(char, frame, x, lam, use_limit=True))
             for x in (0.0, 0.1, 1.0, 10.0)]
        assert max(d) <= 10.0
