"""TOML configuration for models, perturbations and experiments.

Model file::

    m = 1
    K = [0]
    X = 12.0
    N = 4000

    [[potential]]
    interval = [0, inf]
    coefficients = [0, 0, 1]

Optional ``[[boundary]]`` tables give full boundary polynomials
(``coefficients`` ascending; complex entries as strings such as ``"0.5+1j"``)
and ``[[lower]]`` tables add ``(-1)^r D^r (p D^r y)`` terms with
``order = r`` and ``p`` as ``coefficients`` or ``pieces``.

Perturbation file::

    [[q]]
    interval = [0, 1]
    coefficients = [1, -2, 1]

Experiment file: ``model`` and ``perturbation`` paths (relative to the
experiment file), optional ``Nmax`` and ``resolution``.
"""

import hashlib
import json
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .bc_algebra import BoundarySpec
from .piecewise import PiecewisePoly
from .spectral_solver import DEFAULT_GRIDS, DEFAULT_RESOLUTION, ModelProblem

__all__ = [
    "ConfigError",
    "DEFAULT_MODEL",
    "DEFAULT_PERTURBATION",
    "boundary_from_config",
    "config_digest",
    "experiment_from_config",
    "load",
    "model_from_config",
    "parse_text",
    "perturbation_from_config",
    "piecewise_from_config",
]


class ConfigError(ValueError):
    pass


DEFAULT_MODEL = {
    "m": 1,
    "K": [0],
    "X": DEFAULT_GRIDS[1][0],
    "N": DEFAULT_GRIDS[1][1],
    "potential": [{"interval": [0.0, float("inf")], "coefficients": [0.0, 0.0, 1.0]}],
}

DEFAULT_PERTURBATION = {"q": [{"interval": [0.0, 1.0], "coefficients": [1.0, -2.0, 1.0]}]}


def parse_text(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load(path):
    path = Path(path)
    try:
        return parse_text(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def config_digest(resolved):
    """sha256 of the canonical JSON form of a resolved config."""
    blob = json.dumps(_jsonable(resolved), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _complex(v):
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", "").replace("i", "j").replace("jj", "j"))
        except ValueError as exc:
            raise ConfigError(f"not a complex number: {v!r}") from exc
    return complex(v)


def piecewise_from_config(pieces, name="pieces"):
    out = []
    for p in pieces:
        try:
            a, b = (float(v) for v in p["interval"])
            coeffs = tuple(float(c) for c in p["coefficients"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: each piece needs 'interval' and 'coefficients'") from exc
        out.append((a, b, coeffs))
    try:
        return PiecewisePoly(tuple(out))
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def boundary_from_config(cfg):
    """Boundary spec from ``K`` (one-term) or explicit ``[[boundary]]`` polynomials."""
    m = int(cfg["m"])
    if "boundary" in cfg:
        polys = [[_complex(c) for c in b["coefficients"]] for b in cfg["boundary"]]
        return BoundarySpec(m, tuple(polys))
    if "K" not in cfg:
        raise ConfigError("model config needs 'K' or [[boundary]] tables")
    K = [int(k) for k in cfg["K"]]
    try:
        return BoundarySpec.one_term(K, m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def model_from_config(cfg):
    try:
        m = int(cfg["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("model config needs an integer 'm'") from exc
    if m not in DEFAULT_GRIDS:
        raise ConfigError(f"m={m} has no registered numerical model (supported: 1..3)")
    X0, N0 = DEFAULT_GRIDS[m]
    potential = (piecewise_from_config(cfg["potential"], "potential")
                 if "potential" in cfg else PiecewisePoly.polynomial([0.0, 0.0, 1.0]))
    lower = []
    for t in cfg.get("lower", []):
        if "pieces" in t:
            p = piecewise_from_config(t["pieces"], "lower")
        else:
            p = PiecewisePoly.polynomial([float(c) for c in t["coefficients"]])
        lower.append((int(t["order"]), p))
    return ModelProblem(
        m=m, potential=potential, bc=boundary_from_config(cfg),
        X=float(cfg.get("X", X0)), N=int(cfg.get("N", N0)), lower_terms=tuple(lower),
    )


def perturbation_from_config(cfg):
    from .trace_experiment import ingest_perturbation
    try:
        return ingest_perturbation(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def experiment_from_config(path):
    """Resolve an experiment file to ``(model_cfg, perturbation_cfg, options)``."""
    path = Path(path)
    cfg = load(path)
    base = path.parent
    try:
        model_cfg = load(base / cfg["model"])
        pert_cfg = load(base / cfg["perturbation"])
    except KeyError as exc:
        raise ConfigError(f"experiment config is missing {exc}") from exc
    options = {
        "Nmax": cfg.get("Nmax"),
        "resolution": float(cfg.get("resolution", DEFAULT_RESOLUTION)),
    }
    return model_cfg, pert_cfg, options
