"""Regularized traces of even-order operators on the half-line.

Submodules: :mod:`bc_algebra` (boundary determinants and their identities),
:mod:`green_kernel` (Green-function diagonal and arc integrals),
:mod:`spectral_solver` (finite-difference spectra), :mod:`trace_experiment`
(regularized sums against the closed form) and :mod:`cli`.
"""

from .bc_algebra import BoundarySpec, build_frame, characteristic_data, identity_errors
from .green_kernel import g_integral, h0_diag, weyl_arc_integral
from .spectral_solver import ModelProblem, PerturbationSpec, solve
from .trace_experiment import (
    TraceReport,
    ingest_perturbation,
    regularized_partial_sums,
    rhs_closed_form,
    run_trace_experiment,
    tail_extrapolate,
    trace_via_spectral_function,
)

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "ModelProblem",
    "PerturbationSpec",
    "TraceReport",
    "build_frame",
    "characteristic_data",
    "g_integral",
    "h0_diag",
    "identity_errors",
    "ingest_perturbation",
    "regularized_partial_sums",
    "rhs_closed_form",
    "run_trace_experiment",
    "solve",
    "tail_extrapolate",
    "trace_via_spectral_function",
    "weyl_arc_integral",
]
