"""Small numerical helpers shared across modules."""

import numpy as np

ATOL = 1e-12
RTOL = 1e-9


def mixed_close(a, b, atol=ATOL, rtol=RTOL):
    """Elementwise ``|a - b| <= atol + rtol * max(|a|, |b|)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) <= atol + rtol * np.maximum(np.abs(a), np.abs(b))


def neville_at_zero(h, values):
    """Polynomial extrapolation of ``values(h)`` to ``h = 0``.

    Returns the full Neville tableau diagonal; the last entry uses every point.
    """
    h = np.asarray(h, dtype=float)
    p = np.array(values, dtype=complex)
    n = len(h)
    diag = [p[0]]
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i])
        diag.append(p[0])
    return np.array(diag)


def richardson_halving(values, order=1):
    """Richardson table for a sequence computed at step ``h, h/2, h/4, ...``.

    Error is assumed to expand in ``h**order, h**(order+1), ...``.
    Returns the most-extrapolated entry of each row.
    """
    row = [complex(v) for v in values]
    best = [row[-1]]
    p = order
    while len(row) > 1:
        f = 2.0 ** p
        row = [(f * row[i + 1] - row[i]) / (f - 1.0) for i in range(len(row) - 1)]
        best.append(row[-1])
        p += 1
    return np.array(best)
