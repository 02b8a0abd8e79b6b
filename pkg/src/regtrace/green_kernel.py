"""Green-function diagonal of ``(-1)^m D^{2m}`` on the half-line and its arc integrals.

``zeta`` is the branch of ``tau**(1/2m)`` in the sector ``0 <= arg zeta <= pi/m``
and ``Gamma_lambda`` is the arc ``|zeta| = lambda**(1/2m)`` over that sector.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import roots_legendre

from ._numerics import richardson_halving

__all__ = [
    "ArcSpec",
    "GIntegralResult",
    "GreenEval",
    "LadderNotConverged",
    "NearZeroDelta",
    "contour_trace_integrand",
    "free_diag",
    "g_function",
    "g_integral",
    "g_integral_exact",
    "g_integral_ladder",
    "h0_diag",
    "min_abs_delta_on_arc",
    "weyl_arc_integral",
]

ARC_EPSABS = 1e-9
G_EPS_LADDER = (0.2, 0.1, 0.05, 0.025)
G_TAYLOR_CUTOFF = 1e-4


class NearZeroDelta(ArithmeticError):
    """Evaluation point is too close to a zero of the characteristic determinant."""


class LadderNotConverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class ArcSpec:
    lam: float
    m: int

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def radius(self):
        return self.lam ** (1.0 / (2 * self.m))

    def zeta(self, phi):
        return self.radius * np.exp(1j * np.asarray(phi))

    def tau(self, phi):
        return self.zeta(phi) ** (2 * self.m)


@dataclass(frozen=True)
class GreenEval:
    x: float
    zeta: complex
    value: complex


def _exponents(frame):
    zp = frame.zpow[: frame.m]
    return zp[:, None] + zp[None, :]          # z^(a-1) + z^(b-1), [alpha, beta]


def free_diag(frame, zeta):
    """``(i / (2m zeta**(2m-1))) * sum_alpha z**(alpha-1)``."""
    m = frame.m
    return 1j / (2 * m * zeta ** (2 * m - 1)) * np.sum(frame.zpow[:m])


def h0_diag(char, frame, x, zeta, delta_tol=1e-12):
    """Diagonal ``H_0(x, x, tau)`` of the Green function of ``L_0 - tau``."""
    m = frame.m
    zeta = complex(zeta)
    if not -1e-12 <= np.angle(zeta) <= np.pi / m + 1e-12:
        raise ValueError("zeta must lie in the sector 0 <= arg <= pi/m")
    d = char.delta(zeta)
    scale = max(1.0, abs(char.delta.leading) * abs(zeta) ** char.delta.degree)
    if abs(d) <= delta_tol * scale:
        raise NearZeroDelta(f"|Delta({zeta:.6g})| = {abs(d):.3g}")
    ratio = np.array([[p(zeta) for p in row] for row in char.delta_ab]) / d
    expo = np.exp(1j * _exponents(frame) * x * zeta)
    zp = frame.zpow[:m]
    inner = 1.0 - np.sum(expo * ratio, axis=1)
    value = 1j / (2 * m * zeta ** (2 * m - 1)) * np.sum(zp * inner)
    return complex(value)


def _arc_quad(f, m, radius, epsabs=ARC_EPSABS, limit=400):
    """Integral of ``f(zeta) dzeta`` along the arc, adaptive in the angle."""
    def integrand(phi):
        zeta = radius * np.exp(1j * phi)
        return f(zeta) * 1j * zeta

    val, err = integrate.quad(
        integrand, 0.0, np.pi / m, epsabs=epsabs, epsrel=1e-12, limit=limit,
        complex_func=True,
    )
    return val, err


def weyl_arc_integral(m, lam, route="arc"):
    """``-(1/2 pi i)`` times the contour integral of the free diagonal over ``|tau| = lambda``.

    ``route="arc"`` substitutes ``tau = zeta**(2m)`` and integrates along the
    arc; ``route="circle"`` integrates in ``tau`` directly with the principal
    ``2m``-th root.
    """
    m = int(m)
    arc = ArcSpec(float(lam), m)
    s = np.sum(np.exp(1j * np.pi * np.arange(m) / m))

    def free(zeta):
        return 1j / (2 * m * zeta ** (2 * m - 1)) * s

    if route == "arc":
        val, _ = _arc_quad(lambda zeta: free(zeta) * 2 * m * zeta ** (2 * m - 1), m, arc.radius)
    elif route == "circle":
        def integrand(theta):
            tau = arc.lam * np.exp(1j * theta)
            zeta = arc.radius * np.exp(1j * theta / (2 * m))
            return free(zeta) * 1j * tau

        val, _ = integrate.quad(integrand, 0.0, 2 * np.pi, epsabs=ARC_EPSABS,
                                epsrel=1e-12, complex_func=True)
    else:
        raise ValueError(f"unknown route {route!r}")
    val = -val / (2j * np.pi)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val)):
        raise ArithmeticError(f"Weyl arc integral not real: {val}")
    return float(val.real)


def g_function(char, frame, y):
    """The oscillatory kernel ``g(y)``; vectorized in ``y``."""
    m = frame.m
    zp = frame.zpow
    a = zp[1 : m + 1][:, None] + zp[1 : m + 1][None, :]   # z^a + z^b
    b = _exponents(frame)                                  # z^(a-1) + z^(b-1)
    w = char.Pmat.T * char.Bmat                            # [alpha, beta] = P_{beta alpha} B_{alpha beta}
    y = np.asarray(y, dtype=float)
    flat = np.atleast_1d(y)
    out = np.empty(flat.shape, dtype=complex)
    small = flat < G_TAYLOR_CUTOFF
    yy = flat[~small][:, None, None]
    out[~small] = np.sum(w * (np.exp(1j * a * yy) - np.exp(1j * b * yy)) / yy, axis=(1, 2))
    if small.any():
        ys = flat[small][:, None, None]
        ia, ib = 1j * a, 1j * b
        # (e^{ia y} - e^{ib y}) / y to third order
        series = (ia - ib) + (ia**2 - ib**2) * ys / 2 + (ia**3 - ib**3) * ys**2 / 6
        out[small] = np.sum(w * series, axis=(1, 2))
    return out.reshape(y.shape) if y.ndim else complex(out[0])


def _damped_g_integral(char, frame, eps, panel=1.0, order=24, cutoff=40.0):
    """``int_0^{Y} g(y) exp(-eps y) dy`` with ``Y = cutoff / eps`` by composite Gauss."""
    Y = cutoff / eps
    npan = int(np.ceil(Y / panel))
    x, w = roots_legendre(order)
    edges = np.linspace(0.0, Y, npan + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    nodes = (mid + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    total = 0j
    for chunk in np.array_split(np.arange(nodes.size), max(1, nodes.size // 20000)):
        yk = nodes[chunk]
        total += np.sum(weights[chunk] * g_function(char, frame, yk) * np.exp(-eps * yk))
    return total


@dataclass(frozen=True)
class GIntegralResult:
    eps: tuple
    values: np.ndarray
    extrapolated: complex
    tableau: np.ndarray


def g_integral(char, frame, eps_ladder=G_EPS_LADDER, tol=None):
    """Abel-regularized ``int_0^inf g(y) dy`` extrapolated to ``eps -> 0``."""
    return g_integral_ladder(char, frame, eps_ladder, tol).extrapolated


def g_integral_ladder(char, frame, eps_ladder=G_EPS_LADDER, tol=None):
    """Damped integrals along ``eps_ladder`` and their Richardson table.

    The ladder must halve ``eps`` at each step; the damped integrals carry an
    ``O(eps)`` error.  When ``tol`` is given, the last two table diagonals must
    agree to within ``tol``.
    """
    eps_ladder = tuple(float(e) for e in eps_ladder)
    if any(not np.isclose(b, a / 2) for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise ValueError("eps ladder must halve at each step")
    values = np.array([_damped_g_integral(char, frame, e) for e in eps_ladder])
    tableau = richardson_halving(values, order=1)
    if tol is not None and len(tableau) > 1 and abs(tableau[-1] - tableau[-2]) > tol:
        raise LadderNotConverged(
            f"successive extrapolants differ by {abs(tableau[-1] - tableau[-2]):.3g}"
        )
    return GIntegralResult(eps_ladder, values, complex(tableau[-1]), tableau)


def g_integral_exact(char, frame, eps=0.0):
    """Closed form of the damped integral via ``int (e^{-p y} - e^{-q y}) / y = log(q / p)``."""
    m = frame.m
    zp = frame.zpow
    a = zp[1 : m + 1][:, None] + zp[1 : m + 1][None, :]
    b = _exponents(frame)
    w = char.Pmat.T * char.Bmat
    return complex(np.sum(w * (np.log(eps - 1j * b) - np.log(eps - 1j * a))))


def contour_trace_integrand(char, frame, x, lam, use_limit=False, epsabs=ARC_EPSABS):
    """Inner arc integral ``int sum z^(a-1) exp(i (z^(a-1)+z^(b-1)) x zeta) R_ab(zeta) dzeta``.

    ``R_ab`` is ``Delta_ab / Delta`` or, with ``use_limit``, its limit matrix.
    """
    m = frame.m
    arc = ArcSpec(float(lam), m)
    E = _exponents(frame)
    zp = frame.zpow[:m][:, None]
    B = char.Bmat
    min_delta = min_abs_delta_on_arc(char, frame, lam)
    scale = abs(char.delta.leading) * arc.radius ** char.delta.degree
    if not use_limit and min_delta < 1e-12 * scale:
        raise NearZeroDelta(f"min |Delta| on the arc is {min_delta:.3g}; use a larger lambda")

    def f(zeta):
        R = B if use_limit else char.delta_ratio(zeta)
        return np.sum(zp * np.exp(1j * E * x * zeta) * R)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = _arc_quad(f, m, arc.radius, epsabs=epsabs)
        except integrate.IntegrationWarning as exc:
            if not use_limit and min_delta < 1e-6 * scale:
                raise NearZeroDelta(
                    f"quadrature failed next to a near-zero of Delta (min |Delta| = "
                    f"{min_delta:.3g}); use a larger lambda"
                ) from exc
            raise ArithmeticError(f"arc quadrature did not converge: {exc}") from exc
    return complex(val)


def min_abs_delta_on_arc(char, frame, lam, samples=512):
    """Diagnostic: smallest ``|Delta|`` along the arc, sampled then refined locally."""
    arc = ArcSpec(float(lam), frame.m)
    phi = np.linspace(0.0, np.pi / frame.m, samples)
    vals = np.abs(char.delta(arc.zeta(phi)))
    i = int(np.argmin(vals))
    lo, hi = phi[max(i - 1, 0)], phi[min(i + 1, samples - 1)]
    res = optimize.minimize_scalar(lambda t: abs(char.delta(arc.zeta(t))), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-14})
    return float(min(vals[i], res.fun))
