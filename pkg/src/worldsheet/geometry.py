"""Frames and curvatures of a sampled worldsheet.

Index layout of per-node arrays (core grid shape ``(m0, m1)`` in front):

* ``e[..., a, mu]``        tangent vectors d_a X
* ``normals[..., i, mu]``  orthonormal normal pair, i = 0, 1 for n^1, n^2
* ``K[..., a, b, i]``      extrinsic curvature g(n^i, D_a e_b)
* ``omega[..., a]``        twist potential omega_a^{12} = g(D_a n^1, n^2)

The weight-one symbol epsilon^{ab} has epsilon^{01} = +1 and the normal
symbol epsilon_{ij} has epsilon_{12} = +1 in the frame ordering produced by
the gauge-fixing seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._frames_py import procrustes
from .background import Signature, christoffel_at, metric_at, riemann_at
from .grid import WorldsheetGrid, partial_derivatives

EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

# reference-axis pairs tried when seeding the normal frame, primary first
REFERENCE_PAIRS = [(2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1)]
SEED_ACCEPT = 1e-2
SEED_FAIL = 1e-10
DEGENERATE = 1e-12


class GeometryError(ValueError):
    pass


class DegenerateWorldsheetError(GeometryError):
    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = list(nodes)


class CausalityError(GeometryError):
    pass


class FrameSeedError(GeometryError):
    pass


class UnsupportedBackground(GeometryError):
    pass


@dataclass(frozen=True)
class InducedMetric:
    gamma: np.ndarray
    inverse: np.ndarray
    det: np.ndarray

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.abs(self.det))


def tangent_metric(e: np.ndarray, G: np.ndarray) -> np.ndarray:
    return np.einsum("...am,...mn,...bn->...ab", e, G, e)


def induced_metric(grid: WorldsheetGrid, e: np.ndarray | None = None, G: np.ndarray | None = None) -> InducedMetric:
    if e is None:
        e = partial_derivatives(grid, 1)
    if G is None:
        G = metric_at(grid.bg, grid.core)
    gamma = tangent_metric(e, G)
    det = gamma[..., 0, 0] * gamma[..., 1, 1] - gamma[..., 0, 1] * gamma[..., 1, 0]
    scale = np.max(np.abs(gamma)) ** 2
    bad = np.argwhere(np.abs(det) < DEGENERATE * scale)
    if bad.size:
        raise DegenerateWorldsheetError(
            f"degenerate induced metric at {len(bad)} node(s), first {bad[:5].tolist()}",
            nodes=[tuple(b) for b in bad],
        )
    if grid.signature is Signature.LORENTZIAN:
        wrong = np.argwhere(det >= 0)
        if wrong.size:
            raise CausalityError(f"worldsheet not timelike at node(s) {wrong[:5].tolist()}")
    else:
        wrong = np.argwhere(det <= 0)
        if wrong.size:
            raise CausalityError(f"euclidean induced metric not positive at {wrong[:5].tolist()}")
    inv = np.empty_like(gamma)
    inv[..., 0, 0] = gamma[..., 1, 1] / det
    inv[..., 1, 1] = gamma[..., 0, 0] / det
    inv[..., 0, 1] = inv[..., 1, 0] = -gamma[..., 0, 1] / det
    return InducedMetric(gamma, inv, det)


# -- normal frame ----------------------------------------------------------


def _normal_projection(e, G, gamma_inv):
    """Rows k: coordinate axis E_k with its tangential part removed."""
    eG = np.einsum("...am,...mk->...ak", e, G)
    tang = np.einsum("...am,...ab,...bk->...km", e, gamma_inv, eG)
    return np.eye(4) - tang


def seed_frames(e, G, gamma_inv) -> np.ndarray:
    """Gram-Schmidt of reference axes against the tangent plane, per node."""
    Q = _normal_projection(e, G, gamma_inv)
    M = np.einsum("...km,...mn,...ln->...kl", Q, G, Q)
    axis_norm = np.abs(np.diagonal(G, axis1=-2, axis2=-1))
    quality = np.stack(
        [
            (M[..., k, k] * M[..., l, l] - M[..., k, l] ** 2) / (axis_norm[..., k] * axis_norm[..., l])
            for k, l in REFERENCE_PAIRS
        ],
        axis=-1,
    )
    choice = np.where(quality[..., 0] >= SEED_ACCEPT, 0, np.argmax(quality, axis=-1))
    best = np.take_along_axis(quality, choice[..., None], -1)[..., 0]
    if np.any(best < SEED_FAIL):
        bad = np.argwhere(best < SEED_FAIL)
        raise FrameSeedError(f"no reference axis pair spans the normal space at {bad[:5].tolist()}")
    pairs = np.array(REFERENCE_PAIRS)
    k = pairs[choice, 0]
    l = pairs[choice, 1]
    u = np.take_along_axis(Q, k[..., None, None], -2)[..., 0, :]
    w = np.take_along_axis(Q, l[..., None, None], -2)[..., 0, :]
    gdot = lambda x, y: np.einsum("...m,...mn,...n->...", x, G, y)
    n1 = u / np.sqrt(gdot(u, u))[..., None]
    w = w - gdot(w, n1)[..., None] * n1
    n2 = w / np.sqrt(gdot(w, w))[..., None]
    return np.stack([n1, n2], axis=-2)


def rotate_frame(normals: np.ndarray, theta) -> np.ndarray:
    """n'^1 = cos n^1 + sin n^2, n'^2 = -sin n^1 + cos n^2."""
    c = np.cos(theta)[..., None]
    s = np.sin(theta)[..., None]
    n1, n2 = normals[..., 0, :], normals[..., 1, :]
    return np.stack([c * n1 + s * n2, -s * n1 + c * n2], axis=-2)


def _loop_holonomy(first, last, G_first):
    """Angle phi with transport(last -> first node) = R(phi) first."""
    end = procrustes(last, first, G_first)
    gdot = lambda x, y: np.einsum("...m,...mn,...n->...", x, G_first, y)
    c = gdot(end[..., 0, :], first[..., 0, :])
    s = gdot(end[..., 0, :], first[..., 1, :])
    c2 = gdot(end[..., 1, :], first[..., 1, :])
    if np.any(c * c2 - s * gdot(end[..., 1, :], first[..., 0, :]) < 0):
        raise GeometryError("normal frame reverses orientation around a periodic loop")
    return np.arctan2(s, c)


def normal_frame(grid: WorldsheetGrid, e, G, gamma_inv) -> np.ndarray:
    """Orthonormal normal pair with a continuous O(2) gauge."""
    N = np.ascontiguousarray(seed_frames(e, G, gamma_inv))
    Gc = np.ascontiguousarray(G)
    kernels.align_column(N, Gc)
    if grid.closed0:
        m0 = N.shape[0]
        phi = _loop_holonomy(N[0, 0], N[-1, 0], G[0, 0])
        N[:, 0] = rotate_frame(N[:, 0], -phi * np.arange(m0) / m0)
    kernels.align_rows(N, Gc)
    if grid.closed1:
        m1 = N.shape[1]
        phi = np.unwrap(_loop_holonomy(N[:, 0], N[:, -1], G[:, 0]))
        N = rotate_frame(N, -phi[:, None] * (np.arange(m1) / m1)[None, :])
    return N


# -- curvatures ------------------------------------------------------------


def extrinsic_curvature(e, dde, normals, G, Gamma, gamma_inv):
    """K_ab^i = g(n^i, D_a e_b) and the mean curvature K^i."""
    De = dde + np.einsum("...mnl,...an,...bl->...abm", Gamma, e, e)
    K = np.einsum("...im,...mn,...abn->...abi", normals, G, De)
    K = 0.5 * (K + np.swapaxes(K, -2, -3))
    Kmean = np.einsum("...ab,...abi->...i", gamma_inv, K)
    return K, Kmean


def twist_potential(grid: WorldsheetGrid, e, normals, G, Gamma) -> np.ndarray:
    """omega_a^{12} = g(D_a n^1, n^2), antisymmetrized over the pair."""
    dn = np.stack([grid.d(normals, 0), grid.d(normals, 1)], axis=-3)  # [..., a, i, mu]
    Dn = dn + np.einsum("...mnl,...an,...il->...aim", Gamma, e, normals)
    w12 = np.einsum("...am,...mn,...n->...a", Dn[..., 0, :], G, normals[..., 1, :])
    w21 = np.einsum("...am,...mn,...n->...a", Dn[..., 1, :], G, normals[..., 0, :])
    return 0.5 * (w12 - w21)


def twist_curl(grid: WorldsheetGrid, omega) -> np.ndarray:
    """Omega_01^{12} = d_1 omega_0 - d_0 omega_1."""
    return grid.d(omega[..., 0], 1) - grid.d(omega[..., 1], 0)


def twist_curvature(grid: WorldsheetGrid, omega) -> np.ndarray:
    """Density Omega~ = 1/2 eps_ij eps^ab Omega_ab^ij = 2 Omega_01^{12}."""
    return 2.0 * twist_curl(grid, omega)


def flat_form_twist(bg, K, gamma_inv) -> np.ndarray:
    """Omega~ = eps_ij eps^ab K_ac^i K_bd^j gamma^cd (constant curvature only)."""
    if bg.kind.value not in ("flat", "constant_curvature"):
        raise UnsupportedBackground("flat-form twist curvature needs a constant-curvature background")
    return np.einsum("ij,ab,...aci,...bdj,...cd->...", EPS2, EPS2, K, K, gamma_inv)


def worldsheet_christoffel_fd(grid: WorldsheetGrid, gamma, gamma_inv):
    """Christoffels of gamma from finite differences, [..., c, a, b], and d gamma."""
    dg = np.stack([grid.d(gamma, 0), grid.d(gamma, 1)], axis=-3)  # [..., c, a, b] = d_c gamma_ab
    low = 0.5 * (
        np.einsum("...abd->...dab", dg) + np.einsum("...bad->...dab", dg) - dg
    )  # [..., d, a, b] = 1/2 (d_a g_bd + d_b g_ad - d_d g_ab)
    return np.einsum("...cd,...dab->...cab", gamma_inv, low)


def intrinsic_curvature(grid: WorldsheetGrid, gamma, gamma_inv) -> np.ndarray:
    """Scalar curvature from second finite differences of the induced metric."""
    Gm = worldsheet_christoffel_fd(grid, gamma, gamma_inv)
    dG = np.stack([grid.d(Gm, 0), grid.d(Gm, 1)], axis=-4)  # [..., c, a, d, b] = d_c Gamma^a_db
    # R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    Riem = (
        np.einsum("...cadb->...abcd", dG)
        - np.einsum("...dacb->...abcd", dG)
        + np.einsum("...ace,...edb->...abcd", Gm, Gm)
        - np.einsum("...ade,...ecb->...abcd", Gm, Gm)
    )
    return np.einsum("...bd,...abad->...", gamma_inv, Riem)


def gauss_form(bg, K, Kmean, gamma_inv) -> np.ndarray:
    """R = K^i K_i - K_ab^i K^ab_i (flat background only)."""
    if not bg.flat:
        raise UnsupportedBackground("Gauss form of the scalar curvature holds only in a flat background")
    KK = np.einsum("...ac,...bd,...abi,...cdi->...", gamma_inv, gamma_inv, K, K)
    return np.einsum("...i,...i->...", Kmean, Kmean) - KK


def worldsheet_christoffel(e, dde, G, Gamma, gamma_inv):
    """Gamma^d_ab from the tangential part of D_a e_b (no differencing of gamma)."""
    De = dde + np.einsum("...mnl,...an,...bl->...abm", Gamma, e, e)
    low = np.einsum("...cm,...mn,...abn->...cab", e, G, De)
    return np.einsum("...dc,...cab->...dab", gamma_inv, low)


def gauge_rotate(grid: WorldsheetGrid, normals, omega, theta):
    """Rotate the normal pair by theta per node; omega shifts by d theta."""
    theta = np.asarray(theta, dtype=float)
    rotated = rotate_frame(normals, theta)
    dtheta = np.stack([grid.d(theta, 0), grid.d(theta, 1)], axis=-1)
    return rotated, omega + dtheta


@dataclass(eq=False)
class GeometryFields:
    grid: WorldsheetGrid
    e: np.ndarray
    dde: np.ndarray
    G: np.ndarray
    Gamma: np.ndarray
    metric: InducedMetric
    normals: np.ndarray
    K: np.ndarray
    Kmean: np.ndarray
    omega: np.ndarray
    R: np.ndarray
    Omega_tilde: np.ndarray

    @property
    def gamma(self):
        return self.metric.gamma

    @property
    def gamma_inv(self):
        return self.metric.inverse

    @property
    def sqrt_det(self):
        return self.metric.sqrt_det

    @property
    def Omega(self):
        """Twist curvature scalar Omega = Omega~ / sqrt|det gamma|."""
        return self.Omega_tilde / self.sqrt_det

    def with_normals(self, normals) -> "GeometryFields":
        """Recompute the gauge-dependent pieces for a different normal frame."""
        g = self.grid
        K, Kmean = extrinsic_curvature(self.e, self.dde, normals, self.G, self.Gamma, self.gamma_inv)
        omega = twist_potential(g, self.e, normals, self.G, self.Gamma)
        return GeometryFields(
            g, self.e, self.dde, self.G, self.Gamma, self.metric, normals, K, Kmean, omega, self.R,
            twist_curvature(g, omega),
        )


def compute_geometry(grid: WorldsheetGrid) -> GeometryFields:
    Xc = grid.core
    e, dde = partial_derivatives(grid, 2)
    G = metric_at(grid.bg, Xc)
    Gamma = christoffel_at(grid.bg, Xc)
    metric = induced_metric(grid, e, G)
    normals = normal_frame(grid, e, G, metric.inverse)
    K, Kmean = extrinsic_curvature(e, dde, normals, G, Gamma, metric.inverse)
    omega = twist_potential(grid, e, normals, G, Gamma)
    R = intrinsic_curvature(grid, metric.gamma, metric.inverse)
    return GeometryFields(
        grid, e, dde, G, Gamma, metric, normals, K, Kmean, omega, R, twist_curvature(grid, omega)
    )


def integrability_residuals(f: GeometryFields) -> dict[str, np.ndarray]:
    """Pointwise residuals of the Gauss, Ricci and Codazzi-Mainardi equations.

    ``gauss_codazzi``   R_0101 - (K_00.K_11 - K_01.K_01 + Riem(e0,e1,e0,e1))
    ``ricci``           Omega_01^12 - (K_0c^1 K_1^c2 - K_1c^1 K_0^c2 + Riem(e0,e1,n1,n2))
    ``codazzi_mainardi`` [..., c, i]: nabla~_0 K_1c^i - nabla~_1 K_0c^i - Riem(e0,e1,e_c,n^i)
    """
    g = f.grid
    riem = riemann_at(g.bg, g.core)
    e0, e1 = f.e[..., 0, :], f.e[..., 1, :]
    n = f.normals
    R4 = lambda a, b, c, d: np.einsum("...mnab,...m,...n,...a,...b->...", riem, a, b, c, d)

    gc = 0.5 * f.R * f.metric.det - (
        np.einsum("...i,...i->...", f.K[..., 0, 0, :], f.K[..., 1, 1, :])
        - np.einsum("...i,...i->...", f.K[..., 0, 1, :], f.K[..., 0, 1, :])
        + R4(e0, e1, e0, e1)
    )

    ricci_rhs = (
        np.einsum("...c,...cd,...d->...", f.K[..., 0, :, 0], f.gamma_inv, f.K[..., 1, :, 1])
        - np.einsum("...c,...cd,...d->...", f.K[..., 1, :, 0], f.gamma_inv, f.K[..., 0, :, 1])
        + R4(e0, e1, n[..., 0, :], n[..., 1, :])
    )
    ricci = twist_curl(g, f.omega) - ricci_rhs

    Gw = worldsheet_christoffel(f.e, f.dde, f.G, f.Gamma, f.gamma_inv)  # [..., d, a, b]
    dK = np.stack([g.d(f.K, 0), g.d(f.K, 1)], axis=-4)  # [..., a, b, c, i] = d_a K_bc^i
    # omega_a^{ij} K^j with omega^{12} = w, omega^{21} = -w
    wK = np.einsum("...a,ij,...bcj->...abci", f.omega, EPS2, f.K)
    nablaK = (
        dK
        - np.einsum("...dab,...dci->...abci", Gw, f.K)
        - np.einsum("...dac,...bdi->...abci", Gw, f.K)
        - wK
    )
    cm = nablaK[..., 0, 1, :, :] - nablaK[..., 1, 0, :, :]
    rcm = np.einsum(
        "...mnab,...m,...n,...ca,...ib->...ci", riem, e0, e1, f.e, n
    )
    return {"gauss_codazzi": gc, "ricci": ricci, "codazzi_mainardi": cm - rcm}
