import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def results_dir(tmp_path, monkeypatch):
    out = tmp_path / "results"
    monkeypatch.setenv("REGTRACE_RESULTS", str(out))
    return out


@pytest.fixture(scope="session")
def trace_runs():
    """Both trace routes on every registered model with ``q = (1 - x)^2`` on ``[0, 1]``."""
    from regtrace.piecewise import PiecewisePoly
    from regtrace.spectral_solver import REGISTRY, ModelProblem, PerturbationSpec
    from regtrace.trace_experiment import run_trace_experiment

    q = PerturbationSpec(PiecewisePoly(((0.0, 1.0, (1.0, -2.0, 1.0)),)))
    runs = {}
    for m, families in REGISTRY.items():
        for K in families:
            eig, sf, _ = run_trace_experiment(ModelProblem.registered(m, K), q)
            runs[m, K] = (eig, sf)
    return runs
