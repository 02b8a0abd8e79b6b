import json
from pathlib import Path

import pytest

from regtrace.config import (
    DEFAULT_MODEL,
    ConfigError,
    config_digest,
    experiment_from_config,
    load,
    model_from_config,
    parse_text,
    perturbation_from_config,
)
from regtrace.records import RunRecord, append_record, read_records, results_dir

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", [
    "oscillator_m1_dirichlet.toml", "oscillator_m1_neumann.toml",
    "beam_m2_clamped.toml", "beam_m2_free.toml",
])
def test_shipped_model_configs_load(name):
    model = model_from_config(load(CONFIGS / name))
    assert model.m in (1, 2)
    assert model.potential(1.5) == pytest.approx(2.25)


def test_shipped_perturbations_load():
    bump = perturbation_from_config(load(CONFIGS / "q_quadratic_bump.toml"))
    assert bump.integral_q == pytest.approx(1 / 3)
    zero = perturbation_from_config(load(CONFIGS / "q_zero.toml"))
    assert zero.integral_q == 0.0 and zero.psi0 == 0.0


def test_experiment_resolves_relative_paths():
    model_cfg, pert_cfg, options = experiment_from_config(CONFIGS / "experiment_m1_dirichlet.toml")
    assert model_cfg["K"] == [0]
    assert pert_cfg["q"][0]["coefficients"] == [1, -2, 1]
    assert options == {"Nmax": None, "resolution": 0.1}


def test_boundary_tables_accept_complex_strings():
    cfg = parse_text('m = 1\n[[boundary]]\ncoefficients = ["0.5", "1+0j"]\n')
    cfg["potential"] = DEFAULT_MODEL["potential"]
    # a registered scheme exists only for one-term conditions
    with pytest.raises(Exception, match="one-term"):
        model_from_config(cfg)


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_text("m = [")
    with pytest.raises(ConfigError):
        model_from_config({"K": [0]})
    with pytest.raises(ConfigError, match="supported"):
        model_from_config({"m": 4, "K": [0, 1, 2, 3]})
    with pytest.raises(ConfigError):
        model_from_config({"m": 1, "K": [2]})
    with pytest.raises(ConfigError):
        load(CONFIGS / "missing.toml")
    with pytest.raises(ConfigError):
        perturbation_from_config({"q": [{"interval": [0, float("inf")], "coefficients": [1]}]})


def test_lower_terms_from_config():
    cfg = dict(DEFAULT_MODEL, m=2, K=[0, 1], X=8.0, N=300,
               lower=[{"order": 1, "coefficients": [1.0]}])
    model = model_from_config(cfg)
    assert model.lower_terms[0][0] == 1


def test_digest_is_canonical():
    a = {"m": 1, "K": [0], "X": 12.0}
    b = {"X": 12.0, "K": [0], "m": 1}
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(dict(a, X=12.5))


def test_records_round_trip(tmp_path):
    rec = RunRecord.create("green", {"m": 2, "inf": float("inf")}, {"value": 1 + 2j}, True)
    path = append_record(rec, tmp_path)
    append_record(rec, tmp_path)
    assert path.parent.name == rec.digest
    back = read_records(path.parent)
    assert len(back) == 2 and back[0] == back[1]
    assert back[0].passed is True
    json.loads(path.read_text().splitlines()[0])


def test_results_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("REGTRACE_RESULTS", str(tmp_path / "env"))
    assert results_dir() == tmp_path / "env"
    assert results_dir(tmp_path / "flag") == tmp_path / "flag"
    monkeypatch.delenv("REGTRACE_RESULTS")
    assert results_dir() == Path("results")
