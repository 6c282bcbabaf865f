"""Pure-numpy normal-frame alignment flood (fallback for the compiled kernel)."""

from __future__ import annotations

import numpy as np


def procrustes(M: np.ndarray, N: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Closest O(2) recombination of ``N`` to the reference pair ``M``.

    Shapes (..., 2, 4) for M and N, (..., 4, 4) for the metric G at N's nodes.
    """
    A = np.einsum("...am,...mn,...kn->...ak", M, G, N)
    a00, a01, a10, a11 = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    rot = (a00 + a11) ** 2 + (a10 - a01) ** 2
    ref = (a00 - a11) ** 2 + (a10 + a01) ** 2
    use_rot = rot >= ref
    phi = np.where(use_rot, np.arctan2(a10 - a01, a00 + a11), np.arctan2(a10 + a01, a00 - a11))
    c, s = np.cos(phi), np.sin(phi)
    R = np.empty(A.shape)
    R[..., 0, 0] = c
    R[..., 0, 1] = np.where(use_rot, -s, s)
    R[..., 1, 0] = s
    R[..., 1, 1] = np.where(use_rot, c, -c)
    return np.einsum("...ik,...km->...im", R, N)


def align_column(N: np.ndarray, G: np.ndarray) -> np.ndarray:
    for i in range(1, N.shape[0]):
        N[i, 0] = procrustes(N[i - 1, 0], N[i, 0], G[i, 0])
    return N


def align_rows(N: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Rows are independent, so each xi^1 step is vectorized over xi^0."""
    for j in range(1, N.shape[1]):
        N[:, j] = procrustes(N[:, j - 1], N[:, j], G[:, j])
    return N


def align_frames(N: np.ndarray, G: np.ndarray) -> np.ndarray:
    return align_rows(align_column(N, G), G)
