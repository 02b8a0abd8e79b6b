"""Finite-difference spectra of ``(-1)^m D^{2m} + V`` on a truncated half-line.

The operator is discretized on ``[0, X]`` with about ``N`` steps.  Boundary
conditions ``D^{k_j} y(0) = 0`` come from a small registry of self-adjoint
one-term families; the far end is clamped.  Three symmetric schemes cover the
registry:

``clamped``  ``K = {0..m-1}``: zero ghost values centred on ``x = 0``.
``free``     ``K = {m..2m-1}``: quadratic form ``|D_+^m y|^2`` over difference
             stencils inside the grid, which yields the natural conditions.
``odd`` / ``even``
             ``K`` is every even (odd) order below ``2m``: odd (even)
             reflection on a cell-centred grid.

The far end is clamped by ``m`` zero ghosts centred on ``X``.  On the
cell-centred grids with odd ``m`` this needs ``h = X / (N - 1/2)``; otherwise
``h = X / N``.  All three are second order for eigenvalues.
"""

import warnings
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, eig_banded, svd

from .bc_algebra import BoundarySpec
from .piecewise import PiecewisePoly

__all__ = [
    "DEFAULT_RESOLUTION",
    "DEFAULT_GRIDS",
    "REGISTRY",
    "BandedOperator",
    "DiscretenessWarning",
    "EigenNonConvergence",
    "ModelProblem",
    "PerturbationSpec",
    "SpectrumResult",
    "TrustError",
    "UnsupportedBoundary",
    "assemble",
    "banded_roundoff",
    "assemble_factor",
    "eigen_spectrum",
    "eigen_spectrum_factored",
    "half_line_count",
    "perturbed_model",
    "scheme_for",
    "solve",
    "spectral_function_diag",
    "spectrum_trust",
]

REGISTRY = {
    1: [(0,), (1,)],
    2: [(0, 1), (2, 3), (0, 2), (1, 3)],
    3: [(0, 1, 2), (3, 4, 5)],
}

# (X, N) per half-order
DEFAULT_GRIDS = {1: (12.0, 4000), 2: (8.0, 1500), 3: (6.0, 1200)}

# an eigenvalue is trusted when lambda**(1/2m) * h stays below this
DEFAULT_RESOLUTION = 0.1

# "auto" switches to the factored solver once eps * ||A|| exceeds this
ROUNDOFF_BUDGET = 1e-4
FACTORED_MAX_N = 4000


class UnsupportedBoundary(ValueError):
    pass


class EigenNonConvergence(ArithmeticError):
    pass


class TrustError(ValueError):
    pass


class DiscretenessWarning(UserWarning):
    pass


def scheme_for(m, degrees):
    """Discretization scheme for a registered one-term family."""
    K = tuple(degrees)
    if K not in REGISTRY.get(m, []):
        raise UnsupportedBoundary(
            f"K={K} is not a registered self-adjoint family for m={m}; "
            f"registered: {REGISTRY.get(m, [])}"
        )
    if K == tuple(range(m)):
        return "clamped"
    if K == tuple(range(m, 2 * m)):
        return "free"
    if K == tuple(range(0, 2 * m, 2)):
        return "odd"
    if K == tuple(range(1, 2 * m, 2)):
        return "even"
    raise UnsupportedBoundary(f"no scheme for K={K}")  # pragma: no cover


@dataclass(frozen=True)
class ModelProblem:
    """Half-order ``m``, potential, optional lower-order terms, boundary family and grid.

    ``lower_terms`` holds ``(r, p)`` pairs for symmetric terms
    ``(-1)^r D^r (p D^r y)`` with ``1 <= r <= m - 1``.
    """

    m: int
    potential: PiecewisePoly
    bc: BoundarySpec
    X: float
    N: int
    lower_terms: tuple = ()

    def __post_init__(self):
        if self.bc.m != self.m:
            raise ValueError("boundary spec and model disagree on m")
        for c in self.bc.polys:
            if np.count_nonzero(c) != 1:
                raise UnsupportedBoundary(
                    "the numerical path supports one-term conditions D^k y(0) = 0 only; "
                    f"got polynomial coefficients {np.real_if_close(c).tolist()}"
                )
        scheme_for(self.m, self.bc.degrees)
        if not (self.X > 0 and self.N > 2 * self.m + 2):
            raise ValueError("need X > 0 and N > 2m + 2")
        for r, _ in self.lower_terms:
            if not 1 <= r <= self.m - 1:
                raise ValueError(f"lower term order r={r} outside 1..{self.m - 1}")
        if self.potential.lower_bound(self.X) == -np.inf:
            raise ValueError("potential must be bounded below")
        if not self.potential.grows_at_infinity():
            warnings.warn("potential does not grow at infinity; the half-line "
                          "spectrum would not be discrete", DiscretenessWarning, stacklevel=3)

    @classmethod
    def registered(cls, m, degrees, potential=None, X=None, N=None, **kw):
        X0, N0 = DEFAULT_GRIDS[m]
        potential = PiecewisePoly.polynomial([0.0, 0.0, 1.0]) if potential is None else potential
        return cls(m=m, potential=potential, bc=BoundarySpec.one_term(degrees, m),
                   X=X0 if X is None else X, N=N0 if N is None else N, **kw)

    @property
    def degrees(self):
        return self.bc.degrees

    @property
    def h(self):
        if self.scheme != "clamped" and self.m % 2:
            return self.X / (self.N - 0.5)
        return self.X / self.N

    @property
    def scheme(self):
        return scheme_for(self.m, self.bc.degrees)

    def grid(self):
        """Unknown positions; the far-end ghosts are centred on ``X``."""
        m, h = self.m, self.h
        if self.scheme == "clamped":
            n = self.N - m
            return (np.arange(1, n + 1) + (m - 1) / 2) * h
        n = self.N - (m + 1) // 2
        return (np.arange(n) + 0.5) * h


@dataclass(frozen=True)
class PerturbationSpec:
    """Compactly supported perturbation ``q`` with ``psi(0+) = q(0+)``."""

    q: PiecewisePoly
    psi0: float = field(init=False)
    integral_q: float = field(init=False)
    support_end: float = field(init=False)

    def __post_init__(self):
        end = self.q.support_end
        if not np.isfinite(end):
            raise ValueError("q must have bounded support")
        object.__setattr__(self, "support_end", float(end))
        object.__setattr__(self, "psi0", self.q.right_limit_at_zero())
        object.__setattr__(self, "integral_q", self.q.integral())

    def scaled(self, factor):
        return PerturbationSpec(self.q.scaled(factor))


@dataclass(frozen=True)
class BandedOperator:
    """Symmetric matrix in LAPACK upper banded storage, with its grid."""

    ab: np.ndarray
    x: np.ndarray
    h: float
    m: int
    sparse: sp.csr_matrix

    @property
    def bandwidth(self):
        return self.ab.shape[0] - 1

    def to_dense(self):
        return self.sparse.toarray()


def _forward_diff(order, n_rows, n_cols, start=0):
    """Rows ``i`` give ``Delta_+^order`` of the vector starting at column ``start + i``."""
    row = np.array([(-1) ** (order - i) * comb(order, i) for i in range(order + 1)], float)
    return sp.diags([np.full(n_rows, c) for c in row],
                    [start + i for i in range(order + 1)], shape=(n_rows, n_cols))


def _extension(scheme, n, m):
    """Map unknowns to the extended vector ``[m left ghosts, unknowns, m right ghosts]``."""
    rows, cols, vals = [], [], []
    for i in range(n):
        rows.append(m + i)
        cols.append(i)
        vals.append(1.0)
    if scheme in ("odd", "even"):
        s = -1.0 if scheme == "odd" else 1.0
        for g in range(m):
            # ghost at index -1-g reflects unknown g
            rows.append(m - 1 - g)
            cols.append(g)
            vals.append(s)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n + 2 * m, n))


def assemble(model):
    """Symmetric finite-difference matrix for the model."""
    m, h = model.m, model.h
    x = model.grid()
    n = x.size
    scheme = model.scheme
    ext_x = x[0] + h * (np.arange(-m, n + m))   # positions of the extended vector
    E = _extension(scheme, n, m)

    terms = [(m, None)] + list(model.lower_terms)
    A = sp.csr_matrix((n, n))
    for r, p in terms:
        if scheme == "free":
            # difference stencils may not reach the left ghosts
            nrows = n + m - r
            F = _forward_diff(r, nrows, n + 2 * m, start=m)
            centres = x[0] + h * (np.arange(nrows) + r / 2)
        else:
            nrows = n + 2 * m - r
            F = _forward_diff(r, nrows, n + 2 * m)
            centres = ext_x[0] + h * (np.arange(nrows) + r / 2)
        weight = np.ones(nrows) if p is None else p(np.abs(centres))
        T = F.T @ sp.diags(weight) @ F / h ** (2 * r)
        if scheme == "free":
            A = A + E.T @ T @ E
        else:
            # rows of the unknowns, columns through the ghost extension
            A = A + T[m : m + n] @ E
    A = (A + sp.diags(model.potential(x))).tocsr()
    asym = abs(A - A.T).max() if A.nnz else 0.0
    if asym > 1e-12 * abs(A).max():
        raise ArithmeticError(f"assembled matrix is not symmetric (max defect {asym:.3g})")
    A = ((A + A.T) / 2).tocsr()
    bw = m
    ab = np.zeros((bw + 1, n))
    for d in range(bw + 1):
        ab[bw - d, d:] = A.diagonal(d)
    return BandedOperator(ab=ab, x=x, h=h, m=m, sparse=A)


def assemble_factor(model):
    """Dense ``G`` and shift ``c`` with ``G^T G = A + c I`` for the assembled ``A``.

    For the reflection schemes the difference rows run over the fully mirrored
    grid, where the quadratic form counts every term twice.
    """
    m, h = model.m, model.h
    x = model.grid()
    n = x.size
    scheme = model.scheme
    if scheme in ("odd", "even"):
        s = -1.0 if scheme == "odd" else 1.0
        # [m zeros, mirrored unknowns, unknowns, m zeros]
        E = sp.vstack([
            sp.csr_matrix((m, n)),
            s * sp.eye(n, format="csr")[::-1],
            sp.eye(n, format="csr"),
            sp.csr_matrix((m, n)),
        ]).tocsr()
        ext_x = x[0] + h * (np.arange(-m - n, n + m))
        scale = 1.0 / np.sqrt(2.0)
    else:
        E = _extension(scheme, n, m)
        ext_x = x[0] + h * (np.arange(-m, n + m))
        scale = 1.0
    blocks = []
    for r, p in [(m, None)] + list(model.lower_terms):
        if scheme == "free":
            nrows = n + m - r
            F = _forward_diff(r, nrows, n + 2 * m, start=m)
            centres = x[0] + h * (np.arange(nrows) + r / 2)
        else:
            nrows = E.shape[0] - r
            F = _forward_diff(r, nrows, E.shape[0])
            centres = ext_x[0] + h * (np.arange(nrows) + r / 2)
        weight = np.ones(nrows) if p is None else p(np.abs(centres))
        if np.any(weight < 0):
            raise ValueError("factored form needs nonnegative lower-order coefficients")
        blocks.append(sp.diags(np.sqrt(weight) * scale / h**r) @ F @ E)
    v = model.potential(x)
    shift = max(0.0, -float(v.min()))
    blocks.append(sp.diags(np.sqrt(v + shift)))
    return sp.vstack(blocks).toarray(), shift


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    trust_count: int
    grid_eigenfunctions: np.ndarray = None
    x: np.ndarray = None
    h: float = None

    def with_trust(self, count):
        return replace(self, trust_count=int(count))

    @property
    def trusted(self):
        return self.eigenvalues[: self.trust_count]


def eigen_spectrum(matrix, count, vectors=False):
    """Lowest ``count`` eigenvalues (and optionally grid eigenfunctions) in ascending order.

    Uses LAPACK's banded symmetric driver (reduction to tridiagonal form plus
    bisection).  Eigenfunctions are scaled so that ``h * sum(phi**2) = 1``.
    """
    n = matrix.ab.shape[1]
    count = int(min(count, n))
    if count < 1:
        raise ValueError("count must be positive")
    try:
        out = eig_banded(matrix.ab, lower=False, select="i",
                         select_range=(0, count - 1), eigvals_only=not vectors,
                         check_finite=True)
    except LinAlgError as exc:
        raise EigenNonConvergence(f"banded eigensolver failed: {exc}") from exc
    if vectors:
        w, v = out
        v = v / np.sqrt(matrix.h)
        # fix the sign so that the first sizeable entry is positive
        lead = np.argmax(np.abs(v) > 1e-8 * np.abs(v).max(axis=0), axis=0)
        v = v * np.sign(v[lead, np.arange(v.shape[1])])
    else:
        w, v = out, None
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise EigenNonConvergence(f"eigenvalue {bad + 1} did not converge")
    return SpectrumResult(eigenvalues=np.asarray(w), trust_count=count,
                          grid_eigenfunctions=v, x=matrix.x, h=matrix.h)


def eigen_spectrum_factored(model, count, vectors=False):
    """Lowest eigenvalues as squared singular values of the factor ``G``.

    The absolute error is about ``2 sqrt(lambda) eps ||G||`` instead of the
    ``eps ||A|| = eps ||G||**2`` of the banded driver, which matters once the
    ``h**(-2m)`` scaling makes ``eps ||A||`` comparable to the low eigenvalues.
    """
    G, shift = assemble_factor(model)
    x = model.grid()
    n = x.size
    count = int(min(count, n))
    if count < 1:
        raise ValueError("count must be positive")
    try:
        _, sv, vh = svd(G, full_matrices=False, check_finite=True)
    except LinAlgError as exc:
        raise EigenNonConvergence(f"SVD of the factor failed: {exc}") from exc
    order = np.argsort(sv)[:count]
    w = sv[order] ** 2 - shift
    v = None
    if vectors:
        v = vh[order].T / np.sqrt(model.h)
        lead = np.argmax(np.abs(v) > 1e-8 * np.abs(v).max(axis=0), axis=0)
        v = v * np.sign(v[lead, np.arange(v.shape[1])])
    return SpectrumResult(eigenvalues=w, trust_count=count, grid_eigenfunctions=v,
                          x=x, h=model.h)


def banded_roundoff(matrix):
    """``eps * ||A||_1``, the absolute eigenvalue accuracy of the banded driver."""
    return float(np.finfo(float).eps * abs(matrix.sparse).sum(axis=0).max())


def spectrum_trust(model, result, resolution=DEFAULT_RESOLUTION):
    """Number of leading eigenvalues with ``lambda**(1/2m) * h <= resolution``."""
    lam = np.asarray(result.eigenvalues)
    scale = np.abs(lam) ** (1.0 / (2 * model.m)) * model.h
    bad = np.flatnonzero(scale > resolution)
    count = int(bad[0]) if bad.size else lam.size
    if count == 0:
        warnings.warn(
            f"no eigenvalue is resolved (lambda_1**(1/2m) * h = {scale[0]:.3g} > {resolution}); "
            "increase N", stacklevel=2,
        )
    return count


def half_line_count(model, result, factor=4.0):
    """Leading eigenvalues whose classically allowed region ends well before ``X``.

    Counts ``n`` with ``V(X) >= factor * lambda_n``; beyond it the truncated
    problem behaves like a box rather than the half-line operator.
    """
    vx = float(model.potential(np.array([model.X * (1 - 1e-12)]))[0])
    lam = np.asarray(result.eigenvalues)
    bad = np.flatnonzero(vx < factor * lam)
    return int(bad[0]) if bad.size else lam.size


def solve(model, count, vectors=False, resolution=DEFAULT_RESOLUTION, method="auto"):
    """Assemble, solve and attach the trust count.

    ``method`` is ``"banded"``, ``"factored"`` or ``"auto"``; the latter picks
    the factored solver when the banded roundoff exceeds ``ROUNDOFF_BUDGET``
    and the grid is small enough for a dense SVD.
    """
    if method not in ("auto", "banded", "factored"):
        raise ValueError(f"unknown method {method!r}")
    matrix = assemble(model)
    if method == "auto":
        method = "banded"
        if banded_roundoff(matrix) > ROUNDOFF_BUDGET and matrix.x.size <= FACTORED_MAX_N:
            method = "factored"
    if method == "factored":
        res = eigen_spectrum_factored(model, count, vectors=vectors)
    else:
        res = eigen_spectrum(matrix, count, vectors=vectors)
    return res.with_trust(spectrum_trust(model, res, resolution))


def spectral_function_diag(result, x, lam):
    """``sum_{lambda_n <= lam} phi_n(x)**2`` at a grid point.

    ``x`` is a grid index (int) or a coordinate that must coincide with a node.
    """
    if result.grid_eigenfunctions is None:
        raise ValueError("spectrum was computed without eigenfunctions")
    if result.trust_count < result.eigenvalues.size:
        ceiling = result.eigenvalues[result.trust_count]
    else:
        ceiling = np.inf
    if lam >= ceiling:
        raise TrustError(f"lambda={lam} is above the trusted ceiling {ceiling:.6g}")
    if isinstance(x, (int, np.integer)):
        i = int(x)
    else:
        i = int(np.argmin(np.abs(result.x - x)))
        if abs(result.x[i] - x) > 1e-9 * max(1.0, abs(x)):
            raise ValueError(f"x={x} is not a grid point")
    k = int(np.searchsorted(result.eigenvalues, lam, side="right"))
    return float(np.sum(result.grid_eigenfunctions[i, :k] ** 2))


def perturbed_model(model, q):
    """The model with ``q`` added to the potential."""
    if q.support_end > model.X / 2:
        raise ValueError(
            f"perturbation support [0, {q.support_end}] reaches beyond X/2 = {model.X / 2}"
        )
    return replace(model, potential=model.potential + q.q)
