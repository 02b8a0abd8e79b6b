import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regtrace.piecewise import PiecewisePoly
from regtrace.spectral_solver import ModelProblem, PerturbationSpec, SpectrumResult
from regtrace.trace_experiment import (
    ConvergenceWarning,
    ingest_perturbation,
    regularized_partial_sums,
    rhs_closed_form,
    run_trace_experiment,
    tail_diagnostics,
    tail_extrapolate,
    trace_via_spectral_function,
    weyl_increments,
)

BUMP = PerturbationSpec(PiecewisePoly(((0.0, 1.0, (1.0, -2.0, 1.0)),)))


def fake_spectrum(values):
    values = np.asarray(values, dtype=float)
    return SpectrumResult(eigenvalues=values, trust_count=values.size)


# closed form

@pytest.mark.parametrize("m,K,value", [
    (1, (0,), -0.25), (1, (1,), 0.25),
    (2, (0, 1), -0.5), (2, (2, 3), 0.5), (2, (0, 2), -0.25), (2, (1, 3), 0.25),
    (3, (0, 1, 2), -0.75), (3, (3, 4, 5), 0.75),
])
def test_rhs_examples(m, K, value):
    assert rhs_closed_form(m, K, 1.0) == pytest.approx(value, abs=1e-15)


def test_rhs_vanishes_without_perturbation():
    r = rhs_closed_form(2, (0, 1), 0.0)
    assert r == 0.0 and np.copysign(1.0, r) == 1.0


@given(st.integers(1, 6), st.floats(-5, 5))
def test_rhs_is_linear_in_psi0(m, psi0):
    K = tuple(range(m))
    assert rhs_closed_form(m, K, psi0) == pytest.approx(psi0 * rhs_closed_form(m, K, 1.0), abs=1e-12)


# tail extrapolation

def test_weyl_increments_telescope():
    lam = np.array([1.0, 4.0, 9.0, 16.0])
    np.testing.assert_allclose(weyl_increments(lam, 1), [1, 1, 1, 1])
    assert weyl_increments(lam, 2).sum() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        weyl_increments([-1.0, 2.0], 1)
    with pytest.raises(ValueError):
        weyl_increments([1.0, np.nan], 1)


def test_constant_sums_are_exact():
    est = tail_diagnostics(np.full(40, 0.3), np.ones(40))
    assert est.value == pytest.approx(0.3, abs=1e-14)
    assert est.converged


def test_alternating_sums_average_out():
    n = np.arange(1, 65)
    S = 0.7 + 0.4 * (-1.0) ** n
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        assert tail_extrapolate(S, np.ones(64)) == pytest.approx(0.7, abs=1e-12)


def test_richardson_step_removes_inverse_decay():
    s = np.arange(1, 257, dtype=float)
    S = 0.2 + 3.0 / s
    est = tail_diagnostics(S, np.ones_like(s))
    assert abs(est.value - 0.2) < 0.05 * abs(est.window_means[0] - 0.2)
    assert est.converged


def test_growing_sums_warn():
    S = np.arange(1, 65, dtype=float)
    with pytest.warns(ConvergenceWarning):
        tail_extrapolate(S, np.ones(64))


def test_tail_input_checks():
    with pytest.raises(ValueError, match="16"):
        tail_diagnostics(np.zeros(15), np.ones(15))
    with pytest.raises(ValueError):
        tail_diagnostics(np.zeros(20), np.ones(19))
    with pytest.raises(ValueError):
        tail_diagnostics(np.zeros(20), -np.ones(20))


@given(
    st.lists(st.floats(-10, 10), min_size=16, max_size=60),
    st.floats(-5, 5), st.floats(0.1, 3),
)
def test_extrapolation_is_affine(values, shift, scale):
    S = np.asarray(values)
    c = np.linspace(1.0, 2.0, S.size)
    base = tail_diagnostics(S, c).value
    assert tail_diagnostics(S + shift, c).value == pytest.approx(base + shift, abs=1e-9)
    assert tail_diagnostics(scale * S, c).value == pytest.approx(scale * base, abs=1e-9)


# partial sums

def test_partial_sums_telescope_against_weyl_term():
    lam = fake_spectrum((np.arange(1, 41) * 2.0) ** 2)
    mu = fake_spectrum(lam.eigenvalues + 0.1 / np.arange(1, 41))
    rep = regularized_partial_sums(lam, mu, BUMP, 1, (0,), Nmax=40)
    expected = np.sum(mu.eigenvalues - lam.eigenvalues) - 80.0 * BUMP.integral_q / np.pi
    assert rep.partial_sums[-1] == pytest.approx(expected, rel=1e-12)
    assert rep.rhs == -0.25
    json.dumps(rep.to_dict())


def test_nmax_beyond_trust_rejected():
    lam = fake_spectrum(np.arange(1, 41) ** 2.0)
    with pytest.raises(ValueError, match="trusted"):
        regularized_partial_sums(lam, lam, BUMP, 1, (0,), Nmax=41)
    with pytest.raises(ValueError, match="16"):
        regularized_partial_sums(lam, lam, BUMP, 1, (0,), Nmax=10)


def test_pairing_flags_mark_crossed_pairs():
    lam = fake_spectrum(np.arange(1, 31) ** 2.0)
    shifted = lam.eigenvalues.copy()
    shifted[9] += 15.0          # gap below lambda_11 is 21
    rep = regularized_partial_sums(lam, fake_spectrum(shifted), BUMP, 1, (0,), Nmax=30)
    assert rep.pairing_flags == [10]


def test_spectral_function_route_needs_vectors():
    lam = fake_spectrum(np.arange(1, 41) ** 2.0)
    with pytest.raises(ValueError, match="eigenfunctions"):
        trace_via_spectral_function(lam, BUMP, 1, (0,))


def test_too_few_trusted_eigenvalues():
    with pytest.raises(ValueError, match="trusted"):
        run_trace_experiment(ModelProblem.registered(1, (0,), N=300), BUMP)


# perturbation input

def test_ingest_unit_step():
    q = ingest_perturbation({"q": [{"interval": [0, 1], "coefficients": [1]}]})
    assert q.integral_q == pytest.approx(1.0) and q.psi0 == 1.0


def test_ingest_quadratic_bump_from_toml():
    q = ingest_perturbation('[[q]]\ninterval = [0, 1]\ncoefficients = [1, -2, 1]\n')
    assert q.integral_q == pytest.approx(1 / 3, rel=1e-14)
    assert q.psi0 == 1.0


def test_ingest_rejects_unbounded_and_point_pieces():
    with pytest.raises(ValueError, match="bounded"):
        ingest_perturbation({"q": [{"interval": [0, float("inf")], "coefficients": [1]}]})
    with pytest.raises(ValueError, match="point"):
        ingest_perturbation({"q": [{"interval": [0, 0], "coefficients": [2]},
                                   {"interval": [0, 1], "coefficients": [1]}]})
    with pytest.raises(ValueError):
        ingest_perturbation({"r": []})


# end-to-end

def test_sum_is_linear_for_small_q():
    model = ModelProblem.registered(2, (0, 1))
    out = []
    for a in (0.1, 0.05):
        q = PerturbationSpec(PiecewisePoly(((0.0, 1.0, (a, -2 * a, a)),)))
        out.append(run_trace_experiment(model, q)[0].extrapolated)
    assert abs(out[0] - 2 * out[1]) <= 1e-3 * abs(out[0])


def test_zero_perturbation_gives_zero_trace():
    q = PerturbationSpec(PiecewisePoly.zero())
    eig, sf, _ = run_trace_experiment(ModelProblem.registered(1, (1,)), q)
    assert eig.rhs == 0.0
    assert eig.extrapolated == 0.0 and sf.extrapolated == 0.0


def test_routes_agree_on_every_registered_model(trace_runs):
    for (m, K), (eig, sf) in trace_runs.items():
        assert abs(eig.extrapolated - sf.extrapolated) <= 0.02 * max(abs(eig.rhs), 0.05), (m, K)


def test_m2_ordering_follows_closed_form(trace_runs):
    fams = [K for (m, K) in trace_runs if m == 2]
    got = [trace_runs[2, K][0].extrapolated for K in fams]
    want = [trace_runs[2, K][0].rhs for K in fams]
    assert list(np.argsort(got)) == list(np.argsort(want))
    assert all(np.sign(g) == np.sign(w) for g, w in zip(got, want))


def test_m1_windows_are_stable(trace_runs):
    for K in [(0,), (1,)]:
        eig, sf = trace_runs[1, K]
        assert eig.tail.converged
        assert eig.tail.variation <= 0.1 * abs(eig.rhs)
        assert not eig.pairing_flags


def test_spectral_ladder_values_follow_definition(trace_runs):
    _, sf = trace_runs[1, (0,)]
    assert sf.ladder.size == sf.n_terms - 1
    assert np.all(np.isfinite(sf.ladder_values))
    # far up the ladder the values settle near the extrapolated limit
    assert abs(np.mean(sf.ladder_values[-20:]) - sf.extrapolated) < 0.05
