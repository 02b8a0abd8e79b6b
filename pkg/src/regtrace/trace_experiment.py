"""Regularized eigenvalue sums and their comparison with the closed form.

For spectra ``lambda_n`` of ``L`` and ``mu_n`` of ``L + q`` the partial sums are

    S(N) = sum_{n <= N} [mu_n - lambda_n - c_n / pi * int q],

with ``c_n = lambda_n**(1/2m) - lambda_{n-1}**(1/2m)`` (and ``c_1 = lambda_1**(1/2m)``).
The limit is compared with ``-psi(0+) * (m/2 - 1/4 - kappa/(2m))``.
"""

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .piecewise import PiecewisePoly
from .spectral_solver import (
    DEFAULT_RESOLUTION,
    PerturbationSpec,
    perturbed_model,
    solve,
)

__all__ = [
    "ConvergenceWarning",
    "TailEstimate",
    "TraceReport",
    "ingest_perturbation",
    "regularized_partial_sums",
    "rhs_closed_form",
    "run_trace_experiment",
    "tail_diagnostics",
    "tail_extrapolate",
    "trace_via_spectral_function",
    "weyl_increments",
]


class ConvergenceWarning(UserWarning):
    pass


def rhs_closed_form(m, degrees, psi0):
    kappa = sum(degrees)
    return -psi0 * (m / 2 - 0.25 - kappa / (2 * m)) + 0.0


def weyl_increments(eigenvalues, m):
    lam = np.asarray(eigenvalues, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise ValueError("non-finite eigenvalue")
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive to form lambda**(1/2m)")
    return np.diff(lam ** (1.0 / (2 * m)), prepend=0.0)


@dataclass(frozen=True)
class TailEstimate:
    value: float
    window_means: tuple      # Cesaro means on [s/2, s], [s/4, s/2], [s/8, s/4]
    previous: float          # the same Richardson step one doubling earlier
    variation: float
    converged: bool


def _window_mean(S, s, slope, a, b):
    """Mean over ``t in [a, b]`` of ``S(t) = S_n - slope * (t - s_n)`` for ``t in [s_n, s_{n+1})``."""
    lo = np.clip(s[:-1], a, b)
    hi = np.clip(s[1:], a, b)
    width = hi - lo
    mid = (lo + hi) / 2
    return float(np.sum(width * (S[:-1] - slope * (mid - s[:-1]))) / (b - a))


def tail_diagnostics(partial_sums, c, weyl_slope=0.0):
    """Cesaro means of the partial sums over dyadic windows in ``s = sum c``.

    The partial sums are read as a function of the continuous variable
    ``s = lambda**(1/2m)``: constant at ``S_n`` between ``s_n`` and ``s_{n+1}``
    apart from the Weyl term, which keeps decreasing with slope
    ``weyl_slope`` (``int q / pi`` for eigenvalue sums).  The means over
    ``[s_N/2, s_N]`` and ``[s_N/4, s_N/2]`` are combined by one Richardson
    step for an ``O(1/s)`` remainder.
    """
    S = np.asarray(partial_sums, dtype=float)
    c = np.asarray(c, dtype=float)
    if S.size < 16:
        raise ValueError("need at least 16 partial sums")
    if S.size != c.size:
        raise ValueError("partial_sums and c must have equal length")
    if np.any(c < 0):
        raise ValueError("increments c_n must be nonnegative")
    s = np.cumsum(c)
    top = s[-1]
    bounds = [top, top / 2, top / 4, top / 8]
    bounds = [max(b, s[0]) for b in bounds]
    means = []
    for hi, lo in zip(bounds, bounds[1:]):
        if hi <= lo:
            raise ValueError("windows collapse; the increments are too uneven")
        means.append(_window_mean(S, s, weyl_slope, lo, hi))
    value = 2 * means[0] - means[1]
    previous = 2 * means[1] - means[2]
    variation = abs(means[0] - means[1])
    earlier = abs(means[1] - means[2])
    converged = variation < earlier or variation <= 1e-14 * max(1.0, abs(means[0]))
    return TailEstimate(value, tuple(means), previous, variation, bool(converged))


def tail_extrapolate(partial_sums, c, weyl_slope=0.0):
    """Limit estimate of the partial sums; see :func:`tail_diagnostics`."""
    est = tail_diagnostics(partial_sums, c, weyl_slope)
    if not est.converged:
        warnings.warn(
            f"window-to-window variation {est.variation:.3g} is not decreasing",
            ConvergenceWarning, stacklevel=2,
        )
    return est.value


@dataclass
class TraceReport:
    route: str
    m: int
    degrees: tuple
    psi0: float
    integral_q: float
    c: np.ndarray
    partial_sums: np.ndarray
    extrapolated: float
    rhs: float
    rel_error: float
    tail: TailEstimate
    pairing_flags: list = field(default_factory=list)
    ladder: np.ndarray = None
    ladder_values: np.ndarray = None

    @property
    def n_terms(self):
        return len(self.partial_sums)

    def to_dict(self):
        d = asdict(self)
        d["tail"] = asdict(self.tail)
        for k, v in list(d.items()):
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        d["degrees"] = list(self.degrees)
        d["n_terms"] = self.n_terms
        return d


def _rel_error(value, target):
    err = abs(value - target)
    return err / abs(target) if target != 0 else err


def _default_nmax(*spectra):
    return min(s.trust_count for s in spectra)


def _pairing_flags(lam, mu):
    gaps = np.diff(lam)
    local = np.minimum(np.r_[gaps, np.inf], np.r_[np.inf, gaps])
    return [int(i + 1) for i in np.flatnonzero(np.abs(mu - lam) > local / 2)]


def regularized_partial_sums(lams, mus, q, m, degrees, Nmax=None):
    """Partial sums of the regularized trace and their tail extrapolation."""
    Nmax = _default_nmax(lams, mus) if Nmax is None else int(Nmax)
    if Nmax > min(lams.trust_count, mus.trust_count):
        raise ValueError(
            f"Nmax={Nmax} exceeds the trusted counts ({lams.trust_count}, {mus.trust_count})"
        )
    if Nmax < 16:
        raise ValueError(f"Nmax={Nmax}: need at least 16 trusted pairs")
    lam = np.asarray(lams.eigenvalues[:Nmax], dtype=float)
    mu = np.asarray(mus.eigenvalues[:Nmax], dtype=float)
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(mu))):
        raise ValueError("non-finite eigenvalue in input")
    c = weyl_increments(lam, m)
    S = np.cumsum(mu - lam - c * q.integral_q / np.pi)
    tail = tail_diagnostics(S, c, q.integral_q / np.pi)
    rhs = rhs_closed_form(m, degrees, q.psi0)
    return TraceReport(
        route="eigenvalue_sum", m=m, degrees=tuple(degrees), psi0=q.psi0,
        integral_q=q.integral_q, c=c, partial_sums=S, extrapolated=tail.value,
        rhs=rhs, rel_error=_rel_error(tail.value, rhs), tail=tail,
        pairing_flags=_pairing_flags(lam, mu),
    )


def trace_via_spectral_function(lams, q, m, degrees, lambda_ladder=None, Nmax=None):
    """``int q(x) (theta(x, x, lambda) - lambda**(1/2m) / pi) dx`` along a ladder.

    ``theta`` is built from the grid eigenfunctions of the unperturbed
    operator.  Between eigenvalues the integral is linear in
    ``lambda**(1/2m)``, so its Cesaro means over the dyadic windows are exact;
    the same Richardson step as for the eigenvalue sums gives the limit.
    ``lambda_ladder`` (default: midpoints between consecutive eigenvalues) only
    selects the values reported.
    """
    if lams.grid_eigenfunctions is None:
        raise ValueError("spectral-function route needs grid eigenfunctions")
    Nmax = _default_nmax(lams) if Nmax is None else int(Nmax)
    if Nmax > lams.trust_count:
        raise ValueError(f"Nmax={Nmax} exceeds the trusted count {lams.trust_count}")
    lam = np.asarray(lams.eigenvalues[:Nmax], dtype=float)
    phi = lams.grid_eigenfunctions[:, :Nmax]
    qx = q.q(lams.x)
    weights = lams.h * (qx @ phi**2)          # int q phi_n^2 by the grid rule
    c = weyl_increments(lam, m)
    slope = q.integral_q / np.pi
    S = np.cumsum(weights - c * slope)
    tail = tail_diagnostics(S, c, slope)

    if lambda_ladder is None:
        lambda_ladder = (lam[:-1] + lam[1:]) / 2
    ladder = np.asarray(lambda_ladder, dtype=float)
    if ladder.size and ladder.max() > lam[-1]:
        raise ValueError("ladder extends beyond the trusted window")
    cum = np.r_[0.0, np.cumsum(weights)]
    k = np.searchsorted(lam, ladder, side="right")
    values = cum[k] - ladder ** (1.0 / (2 * m)) * slope

    rhs = rhs_closed_form(m, degrees, q.psi0)
    return TraceReport(
        route="spectral_function", m=m, degrees=tuple(degrees), psi0=q.psi0,
        integral_q=q.integral_q, c=c, partial_sums=S, extrapolated=tail.value,
        rhs=rhs, rel_error=_rel_error(tail.value, rhs), tail=tail,
        ladder=ladder, ladder_values=values,
    )


def ingest_perturbation(config):
    """Perturbation from ``{"q": [{"interval": [a, b], "coefficients": [...]}, ...]}``.

    Accepts a mapping or TOML text.  ``int q`` and ``q(0+)`` are computed from
    the pieces exactly.
    """
    if isinstance(config, str):
        from .config import parse_text
        config = parse_text(config)
    pieces = config.get("q", config.get("pieces"))
    if pieces is None:
        raise ValueError("perturbation config needs a 'q' table array")
    parsed = []
    for p in pieces:
        a, b = (float(v) for v in p["interval"])
        coeffs = [float(v) for v in p["coefficients"]]
        if a == b:
            raise ValueError(
                f"point piece at x={a}: q must be given on intervals "
                "(right-continuous at 0)"
            )
        if not np.isfinite(b) and np.any(np.asarray(coeffs) != 0):
            raise ValueError("q must have bounded support; got a piece reaching infinity")
        parsed.append((a, b, coeffs))
    return PerturbationSpec(PiecewisePoly(tuple(parsed)))


def run_trace_experiment(model, q, Nmax=None, resolution=DEFAULT_RESOLUTION, count=None):
    """Solve ``L`` and ``L + q`` and return both trace reports.

    Returns ``(eigenvalue_report, spectral_function_report, (lams, mus))``.
    """
    if count is None:
        s_max = resolution / model.h
        count = int(model.X / np.pi * s_max * 1.2) + 24
    lams = solve(model, count, vectors=True, resolution=resolution)
    mus = solve(perturbed_model(model, q), count, resolution=resolution)
    if min(lams.trust_count, mus.trust_count) < 21:
        raise ValueError(
            f"only {min(lams.trust_count, mus.trust_count)} trusted eigenvalues; "
            "raise N (finer grid) or X"
        )
    eig = regularized_partial_sums(lams, mus, q, model.m, model.degrees, Nmax)
    sf = trace_via_spectral_function(lams, q, model.m, model.degrees, Nmax=eig.n_terms)
    return eig, sf, (lams, mus)
