"""Characteristic determinants of polynomial boundary conditions at x = 0.

Everything here works with floating complex arithmetic.  The operator has
order ``2m``; the boundary conditions are ``P_j(D) y(0) = 0`` with
``deg P_j = k_j`` and ``0 <= k_1 < ... < k_m <= 2m - 1``.

Polynomials are stored with ascending coefficients, as in
:mod:`numpy.polynomial.polynomial`.  Matrix indices in the public functions
are 1-based where they mirror the usual (alpha, beta) notation, and arrays are
0-based everywhere else.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from numpy.polynomial import polynomial as npoly

from ._numerics import neville_at_zero, richardson_halving

__all__ = [
    "ALGEBRA_M_CAP",
    "BoundarySpec",
    "CharacteristicData",
    "ComplexPoly",
    "DegeneracyError",
    "GrowthReport",
    "IdentityViolation",
    "NonNormalizedError",
    "SingularBoundaryMatrix",
    "UnitRootFrame",
    "abel_trace_PB",
    "boundary_matrix",
    "build_frame",
    "characteristic_data",
    "check_condition_A",
    "closed_form_B",
    "delta_ab_poly",
    "delta_poly",
    "delta_structure",
    "identity_errors",
    "in_extended_set",
    "sign_pattern_expected",
    "limit_matrix_B",
    "normalized_sets",
    "p_matrix",
    "random_spec",
    "sp_phi_B",
    "trace_PB",
    "trace_PB_closed",
]

ALGEBRA_M_CAP = 12
INTERP_RADIUS = 2.0


class NonNormalizedError(ValueError):
    """Boundary degrees are not strictly increasing inside ``[0, 2m-1]``."""


class DegeneracyError(ArithmeticError):
    """The leading coefficient of the characteristic determinant vanished."""


class IdentityViolation(ArithmeticError):
    """A closed-form identity failed beyond its tolerance."""


class SingularBoundaryMatrix(ArithmeticError):
    """The boundary matrix is numerically singular at a sample point."""

    def __init__(self, zeta, abs_delta):
        self.zeta = zeta
        self.abs_delta = abs_delta
        super().__init__(
            f"boundary matrix singular at zeta={zeta:.6g} (|Delta|={abs_delta:.3g}); "
            "use larger radii"
        )


def _check_degrees(m, degrees):
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise NonNormalizedError(f"m must be a positive integer, got {m!r}")
    if m > ALGEBRA_M_CAP:
        raise NonNormalizedError(f"m={m} exceeds the algebra cap {ALGEBRA_M_CAP}")
    degrees = [int(k) for k in degrees]
    if len(degrees) != m:
        raise NonNormalizedError(f"need {m} boundary degrees, got {len(degrees)}")
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise NonNormalizedError(f"degrees must be strictly increasing: {degrees}")
    if degrees[0] < 0 or degrees[-1] > 2 * m - 1:
        raise NonNormalizedError(f"degrees must lie in [0, {2 * m - 1}]: {degrees}")
    return tuple(degrees)


@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial with complex coefficients in ascending order."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def coeff(self, k):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0j

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)


@dataclass(frozen=True)
class BoundarySpec:
    """``m`` boundary polynomials ``P_j`` with degrees ``k_j`` and ``kappa``."""

    m: int
    polys: tuple
    degrees: tuple = field(init=False)
    kappa: int = field(init=False)

    def __post_init__(self):
        polys = []
        for p in self.polys:
            c = np.atleast_1d(np.asarray(p, dtype=complex))
            nz = np.flatnonzero(c)
            if not nz.size:
                raise NonNormalizedError("a boundary polynomial is identically zero")
            c = c[: nz[-1] + 1].copy()
            c.setflags(write=False)
            polys.append(c)
        degrees = _check_degrees(self.m, [len(c) - 1 for c in polys])
        object.__setattr__(self, "polys", tuple(polys))
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "kappa", sum(degrees))

    @classmethod
    def one_term(cls, degrees, m=None):
        """Spec with ``P_j(D) = D**k_j``."""
        degrees = [int(k) for k in degrees]
        m = len(degrees) if m is None else m
        polys = [np.eye(k + 1)[k] for k in degrees]
        return cls(m, tuple(polys))

    @property
    def leading_coeffs(self):
        return np.array([c[-1] for c in self.polys])

    def evaluate(self, points):
        """``P_j(points)`` with shape ``points.shape + (m,)``."""
        points = np.asarray(points, dtype=complex)
        return np.stack([npoly.polyval(points, c) for c in self.polys], axis=-1)


@dataclass(frozen=True)
class UnitRootFrame:
    m: int
    degrees: tuple
    z: complex
    zpow: np.ndarray
    W: np.ndarray

    def columns(self):
        """Vandermonde columns ``e^(j) = (1, w_j, ..., w_j**(m-1))``."""
        return [self.W[:, j] for j in range(self.m)]


@dataclass(frozen=True)
class CharacteristicData:
    delta: ComplexPoly
    delta_ab: tuple
    Bmat: np.ndarray
    Pmat: np.ndarray

    @property
    def m(self):
        return self.Bmat.shape[0]

    def delta_ratio(self, zeta):
        """Matrix ``Delta_ab(zeta) / Delta(zeta)`` (0-based ``[alpha, beta]``)."""
        d = self.delta(zeta)
        return np.array([[p(zeta) for p in row] for row in self.delta_ab]) / d


def _zpow(m, t):
    # exact table lookup avoids drift in z**t for large t
    return np.exp(1j * np.pi * (np.asarray(t) % (2 * m)) / m)


def build_frame(m, degrees):
    """Root of unity ``z = exp(i pi / m)`` and the Vandermonde matrix on ``z**k_j``."""
    degrees = _check_degrees(m, degrees)
    zpow = _zpow(m, np.arange(2 * m))
    w = zpow[list(degrees)]
    W = w[None, :] ** np.arange(m)[:, None]
    return UnitRootFrame(m=m, degrees=degrees, z=complex(zpow[1]), zpow=zpow, W=W)


def _row_points(frame, zeta, sign=1):
    # i * z**(l-1) * zeta for l = 1..m, broadcast over zeta
    zeta = np.asarray(zeta, dtype=complex)
    return sign * 1j * zeta[..., None] * frame.zpow[: frame.m]


def boundary_matrix(spec, frame, zeta):
    """``[P_j(i z**(l-1) zeta)]`` with rows ``l`` and columns ``j``.

    ``zeta`` may be an array; the matrix axes are appended.
    """
    return spec.evaluate(_row_points(frame, zeta))


def _interp_nodes(kappa):
    n = 2 * (kappa + 1)
    return n, INTERP_RADIUS * np.exp(2j * np.pi * np.arange(n) / n)


def _interpolate(values, kappa, tol=1e-11):
    """Coefficients from samples at scaled roots of unity.

    The sample count is twice the expected degree bound so that a degree
    excess would show up as non-negligible high coefficients.
    """
    n = values.shape[-1]
    scaled = np.fft.fft(values, axis=-1) / n
    coeffs = scaled / INTERP_RADIUS ** np.arange(n)
    scale = np.max(np.abs(scaled), axis=-1, keepdims=True)
    small = np.abs(scaled) <= tol * np.where(scale > 0, scale, 1.0)
    coeffs = np.where(small, 0.0, coeffs)
    return coeffs


def delta_poly(spec, frame):
    """Characteristic determinant ``Delta(zeta) = det B(zeta)`` as a polynomial."""
    n, nodes = _interp_nodes(spec.kappa)
    values = np.linalg.det(boundary_matrix(spec, frame, nodes))
    poly = ComplexPoly(_interpolate(values, spec.kappa))
    if poly.degree != spec.kappa:
        raise DegeneracyError(
            f"Delta has computed degree {poly.degree}, expected kappa={spec.kappa}"
        )
    return poly


def _delta_ab_values(spec, frame, nodes):
    """Samples of every ``Delta_ab`` at ``nodes``; shape ``(m, m, len(nodes))``."""
    m = spec.m
    base = boundary_matrix(spec, frame, nodes)            # (n, m, m)
    repl = spec.evaluate(_row_points(frame, nodes, -1))   # (n, alpha, j)
    out = np.empty((m, m, len(nodes)), dtype=complex)
    for beta in range(m):
        mats = np.repeat(base[:, None, :, :], m, axis=1)  # (n, alpha, l, j)
        mats[:, :, beta, :] = repl
        out[:, beta, :] = np.linalg.det(mats).T
    return out


def delta_ab_poly(spec, frame, alpha, beta):
    """``Delta_ab``: row ``beta`` of ``B(zeta)`` replaced by ``P_j(-i z**(alpha-1) zeta)``.

    ``alpha`` and ``beta`` are 1-based.
    """
    if not (1 <= alpha <= spec.m and 1 <= beta <= spec.m):
        raise IndexError(f"alpha, beta must lie in 1..{spec.m}")
    n, nodes = _interp_nodes(spec.kappa)
    vals = _delta_ab_values(spec, frame, nodes)[alpha - 1, beta - 1]
    return ComplexPoly(_interpolate(vals, spec.kappa))


def characteristic_data(spec, frame):
    """Bundle ``Delta``, every ``Delta_ab``, the limit matrix and ``P``."""
    delta = delta_poly(spec, frame)
    n, nodes = _interp_nodes(spec.kappa)
    coeffs = _interpolate(_delta_ab_values(spec, frame, nodes), spec.kappa)
    delta_ab = tuple(
        tuple(ComplexPoly(coeffs[a, b]) for b in range(spec.m)) for a in range(spec.m)
    )
    B = _limit_from(delta, delta_ab, spec.kappa)
    return CharacteristicData(delta=delta, delta_ab=delta_ab, Bmat=B, Pmat=p_matrix(frame))


def _limit_from(delta, delta_ab, kappa):
    lead = delta.coeff(kappa)
    return np.array([[p.coeff(kappa) / lead for p in row] for row in delta_ab])


def limit_matrix_B(spec, frame):
    """``lim Delta_ab / Delta`` as the ratio of ``zeta**kappa`` coefficients."""
    return characteristic_data(spec, frame).Bmat


def closed_form_B(frame, degrees):
    """``W diag((-1)**k_j) W^{-1}``."""
    signs = (-1.0) ** np.asarray(degrees)
    W = frame.W
    # B W = W D  =>  W^T B^T = (W D)^T
    return np.linalg.solve(W.T, (W * signs).T).T


def p_matrix(frame):
    """Matrix with entry ``1 / (1 + z**(beta - alpha))`` at row beta, column alpha."""
    idx = np.arange(frame.m)
    return 1.0 / (1.0 + _zpow(frame.m, idx[:, None] - idx[None, :]))


def trace_PB(char, imag_tol=1e-8):
    """Trace of ``P @ B``; must be real."""
    t = np.trace(char.Pmat @ char.Bmat)
    if abs(t.imag) > imag_tol:
        raise IdentityViolation(f"Sp(PB) has imaginary part {t.imag:.3e}")
    return complex(t)


def trace_PB_closed(m, degrees):
    """Exact value ``m(2m-1)/2 - kappa``."""
    degrees = _check_degrees(m, degrees)
    return Fraction(m * (2 * m - 1), 2) - sum(degrees)


def in_extended_set(m, degrees, n):
    """Whether ``n`` belongs to ``{k_j + 2 m p : p >= 0}``."""
    return n >= 0 and (n % (2 * m)) in set(degrees)


def sign_pattern_expected(m, degrees, n):
    return (-1) ** n * m if in_extended_set(m, degrees, n) else (-1) ** (n + 1) * m


def _phi(m, n):
    n = np.asarray(n)
    return _zpow(m, np.multiply.outer(n, np.arange(m)))


def sp_phi_B(frame, degrees, n):
    """``(B phi_n, phi_n)`` for ``phi_n = (1, z**n, ..., z**((m-1) n))``."""
    B = closed_form_B(frame, degrees)
    phi = _phi(frame.m, n)
    return complex(np.vdot(phi, B @ phi))


def abel_trace_PB(frame, degrees, ladder=range(4, 12), rhos=None):
    """Abel limit of ``sum (-1)**n rho**n Sp(phi_n phi_n^* B)`` as ``rho -> 1-``.

    By default the series is summed numerically on ``rho_k = 1 - 2**-k`` and
    extrapolated with a Richardson table in ``1 - rho``.  Explicit ``rhos`` are
    extrapolated by polynomial (Neville) interpolation instead.

    Returns ``(limit, partial_values)``.
    """
    B = closed_form_B(frame, degrees)
    explicit = rhos is not None
    rhos = list(rhos) if explicit else [1.0 - 2.0 ** -k for k in ladder]
    values = []
    for rho in rhos:
        nmax = int(np.ceil(np.log(1e-18) / np.log(rho)))
        n = np.arange(nmax)
        phis = _phi(frame.m, n)                                    # (nmax, m)
        terms = np.einsum("ni,ij,nj->n", phis.conj(), B, phis)
        values.append(np.sum((-1.0) ** n * rho ** n * terms))
    values = np.array(values)
    if explicit:
        limit = neville_at_zero(1.0 - np.asarray(rhos), values)[-1]
    else:
        limit = richardson_halving(values, order=1)[-1]
    return complex(limit), values


@dataclass(frozen=True)
class GrowthReport:
    radii: tuple
    rays: tuple
    max_normalized: np.ndarray
    ratio: float
    passed: bool
    min_abs_delta: float


def check_condition_A(spec, frame, radii, rays, factor=2.0, singular_tol=1e-13):
    """Sample ``|[B^{-1}(zeta)]_{j l}| * |zeta|**k_j`` on rays and radii.

    Row ``j`` of the inverse pairs with column ``j`` of ``B``, which carries
    degree ``k_j``.  Passes when the largest normalized magnitude at the
    outermost radius is within ``factor`` of the one at the innermost radius.
    """
    radii = tuple(float(r) for r in radii)
    rays = tuple(float(t) for t in rays)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    if any(not 0 <= t < np.pi / spec.m for t in rays):
        raise ValueError(f"rays must lie in [0, pi/{spec.m})")
    k = np.asarray(spec.degrees, dtype=float)
    maxima = []
    min_delta = np.inf
    for r in radii:
        zetas = r * np.exp(1j * np.asarray(rays))
        mats = boundary_matrix(spec, frame, zetas)
        # a-priori entry bounds, so that a vanishing column still shows up
        bound = np.array([np.abs(c).sum() for c in spec.polys])
        col_scale = bound[None, :] * np.maximum(1.0, r) ** k[None, :] * np.ones((len(zetas), 1))
        dets = np.linalg.det(mats / col_scale[:, None, :])
        for zeta, d, cs in zip(zetas, dets, col_scale):
            if abs(d) < singular_tol:
                raise SingularBoundaryMatrix(zeta, abs(d) * np.prod(cs))
        min_delta = min(min_delta, float(np.min(np.abs(dets) * np.prod(col_scale, axis=-1))))
        inv = np.linalg.inv(mats)                                # (n, j, l)
        normalized = np.abs(inv) * r ** k[None, :, None]
        maxima.append(normalized.max())
    maxima = np.array(maxima)
    ratio = float(maxima[-1] / maxima[0])
    return GrowthReport(
        radii=radii, rays=rays, max_normalized=maxima, ratio=ratio,
        passed=bool(ratio <= factor and 1.0 / ratio <= factor), min_abs_delta=min_delta,
    )


def normalized_sets(m):
    """Every normalized degree set for half-order ``m`` (``C(2m, m)`` of them)."""
    return [tuple(c) for c in combinations(range(2 * m), m)]


def identity_errors(m, degrees, n_max=None):
    """Errors of the closed-form identities for the one-term spec with ``degrees``."""
    spec = BoundarySpec.one_term(degrees, m)
    frame = build_frame(m, degrees)
    char = characteristic_data(spec, frame)
    Bc = closed_form_B(frame, degrees)
    tr = trace_PB(char)
    closed = trace_PB_closed(m, degrees)
    n_max = 8 * m if n_max is None else n_max
    ns = np.arange(n_max + 1)
    phis = _phi(m, ns)
    B = char.Bmat
    sp = np.einsum("ni,ij,nj->n", phis.conj(), B, phis)
    expected = np.array([sign_pattern_expected(m, degrees, int(n)) for n in ns])
    return {
        "trace_pb": tr,
        "trace_pb_closed": closed,
        "trace_error": abs(tr - float(closed)),
        "b_squared_error": float(np.max(np.abs(B @ B - np.eye(m)))),
        "limit_vs_closed_error": float(np.max(np.abs(char.Bmat - Bc))),
        "sign_pattern_error": float(np.max(np.abs(sp - expected))),
        "p_symmetry_error": float(np.max(np.abs(char.Pmat + char.Pmat.T - 1.0))),
    }


def random_spec(rng, m, scale=1.0, phases=True):
    """Random normalized spec: random ``K``, unit-modulus leading coefficients
    (exactly 1 with ``phases=False``) and complex Gaussian lower-order
    coefficients of size ``scale``."""
    degrees = sorted(rng.choice(2 * m, size=m, replace=False).tolist())
    polys = []
    for k in degrees:
        c = scale * (rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1))
        c[k] = np.exp(2j * np.pi * rng.random()) if phases else 1.0
        polys.append(c)
    return BoundarySpec(m, tuple(polys))


def delta_structure(spec):
    """Degree and leading coefficient of ``Delta`` and the top degree of every ``Delta_ab``."""
    frame = build_frame(spec.m, spec.degrees)
    delta = delta_poly(spec, frame)
    expected = np.prod(spec.leading_coeffs * 1j ** np.asarray(spec.degrees)) * np.linalg.det(frame.W)
    n, nodes = _interp_nodes(spec.kappa)
    coeffs = _interpolate(_delta_ab_values(spec, frame, nodes), spec.kappa)
    ab_degrees = [ComplexPoly(coeffs[a, b]).degree for a in range(spec.m) for b in range(spec.m)]
    return {
        "kappa": spec.kappa,
        "degree": delta.degree,
        "leading": complex(delta.leading),
        "leading_expected": complex(expected),
        "leading_rel_error": float(abs(delta.leading - expected) / abs(expected)),
        "max_delta_ab_degree": int(max(ab_degrees)),
    }
