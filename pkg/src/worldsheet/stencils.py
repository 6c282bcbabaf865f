"""Finite-difference operators on the parameter grid.

Interior nodes use the centered 3-point stencil.  Edge nodes of a
non-periodic axis use a 5-point one-sided stencil whose leading truncation
error, h**2 f'''/6, equals the centered one; the first error term that
differs is O(h**4).  This keeps compositions of up to three derivatives
(intrinsic curvature from the induced metric) pointwise O(h**2) up to the
edge.  Periodic axes wrap.
"""

from __future__ import annotations

import numpy as np

# f'(0) ~ sum(EDGE[k] * f(k h)) / h
EDGE = np.array([-2.5, 5.5, -5.0, 2.5, -0.5])


def diff(f: np.ndarray, axis: int, h: float, periodic: bool = False) -> np.ndarray:
    """First derivative of ``f`` along ``axis`` with spacing ``h``."""
    f = np.asarray(f, dtype=float)
    f = np.moveaxis(f, axis, 0)
    if periodic:
        out = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
        return np.moveaxis(out, 0, axis)
    n = f.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 nodes along axis {axis}, got {n}")
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = np.tensordot(EDGE, f[:5], axes=1) / h
    out[-1] = -np.tensordot(EDGE, f[::-1][:5], axes=1) / h
    return np.moveaxis(out, 0, axis)


def trapezoid_weights(n: int, h: float, periodic: bool) -> np.ndarray:
    """1D quadrature weights (composite trapezoid, or plain sum when periodic)."""
    w = np.full(n, h)
    if not periodic:
        w[0] = w[-1] = 0.5 * h
    return w
