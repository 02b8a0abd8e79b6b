"""Piecewise polynomials on the half-line, used for potentials and perturbations."""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly


@dataclass(frozen=True)
class Piece:
    a: float
    b: float
    coeffs: tuple   # ascending, in the global variable x


@dataclass(frozen=True)
class PiecewisePoly:
    """Real piecewise polynomial; zero outside the listed pieces.

    Pieces are half-open ``[a, b)``, sorted and non-overlapping.  ``b`` may be
    ``inf``.
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(
            p if isinstance(p, Piece) else Piece(float(p[0]), float(p[1]), tuple(map(float, p[2])))
            for p in self.pieces
        )
        pieces = tuple(sorted(pieces, key=lambda p: p.a))
        for p in pieces:
            if not p.a < p.b:
                raise ValueError(f"empty interval [{p.a}, {p.b})")
            if p.a < 0:
                raise ValueError("pieces must lie in [0, inf)")
            if not np.all(np.isfinite(p.coeffs)):
                raise ValueError("coefficients must be finite")
        for p, q in zip(pieces, pieces[1:]):
            if q.a < p.b:
                raise ValueError(f"overlapping pieces at x={q.a}")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def zero(cls):
        return cls(())

    @classmethod
    def polynomial(cls, coeffs, a=0.0, b=np.inf):
        return cls(((a, b, tuple(coeffs)),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.pieces:
            mask = (x >= p.a) & (x < p.b)
            out[mask] = npoly.polyval(x[mask], p.coeffs)
        return out

    def __add__(self, other):
        # merge breakpoints; sum the active polynomials on each sub-interval
        cuts = sorted({c for f in (self, other) for p in f.pieces for c in (p.a, p.b)})
        merged = []
        for a, b in zip(cuts, cuts[1:]):
            c = np.zeros(1)
            active = False
            for f in (self, other):
                for p in f.pieces:
                    if p.a <= a and b <= p.b:
                        c = npoly.polyadd(c, p.coeffs)
                        active = True
            if active:
                merged.append(Piece(a, b, tuple(c)))
        return PiecewisePoly(tuple(merged))

    def scaled(self, factor):
        return PiecewisePoly(tuple(Piece(p.a, p.b, tuple(factor * c for c in p.coeffs))
                                   for p in self.pieces))

    @property
    def support_end(self):
        ends = [p.b for p in self.pieces if np.any(np.asarray(p.coeffs) != 0)]
        return max(ends) if ends else 0.0

    def integral(self):
        total = 0.0
        for p in self.pieces:
            if not np.isfinite(p.b):
                if np.any(np.asarray(p.coeffs) != 0):
                    return np.inf
                continue
            anti = npoly.polyint(p.coeffs)
            total += npoly.polyval(p.b, anti) - npoly.polyval(p.a, anti)
        return float(total)

    def right_limit_at_zero(self):
        """``q(0+)``; 0 when no piece starts at the origin."""
        for p in self.pieces:
            if p.a == 0.0:
                return float(p.coeffs[0]) if p.coeffs else 0.0
        return 0.0

    def lower_bound(self, upto, samples=4001):
        """Sampled minimum on ``[0, upto]``, plus the exact piece endpoints."""
        xs = np.linspace(0.0, upto, samples)
        ends = [c for p in self.pieces for c in (p.a, p.b) if np.isfinite(c) and c <= upto]
        xs = np.concatenate([xs, ends])
        return float(np.min(self(xs))) if xs.size else 0.0

    def grows_at_infinity(self):
        """Whether the last piece is unbounded with a positive leading term of degree >= 1."""
        if not self.pieces or np.isfinite(self.pieces[-1].b):
            return False
        c = np.trim_zeros(np.asarray(self.pieces[-1].coeffs), "b")
        return c.size >= 2 and c[-1] > 0
