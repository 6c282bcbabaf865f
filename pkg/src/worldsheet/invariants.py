"""Action integrals and topological quantities of a sampled worldsheet."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import stencils
from .background import Signature
from .geometry import GeometryFields, worldsheet_christoffel


class InvariantError(ValueError):
    pass


def _integrate(f: GeometryFields, density: np.ndarray, mask: np.ndarray | None = None) -> float:
    w = f.grid.weights()
    if mask is not None:
        w = np.where(mask, w, 0.0)
    # fixed-order reduction keeps reports bit-reproducible
    return float(np.sum(w * density, dtype=np.float64))


def area(f: GeometryFields, mask: np.ndarray | None = None) -> float:
    """I0: quadrature of sqrt|det gamma| over the parameter rectangle."""
    return _integrate(f, f.sqrt_det, mask)


def gauss_bonnet_bulk(f: GeometryFields) -> float:
    """I1: quadrature of sqrt|det gamma| R."""
    return _integrate(f, f.sqrt_det * f.R)


def chern_integral(f: GeometryFields) -> dict:
    """Integral of the twist-curvature density (no metric factor); also raw / 2 pi."""
    raw = _integrate(f, f.Omega_tilde)
    return {"raw": raw, "over_2pi": raw / (2.0 * math.pi)}


@dataclass(frozen=True)
class ActionValues:
    I0: float
    I1: float
    I2: float
    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def S(self) -> float:
        return -self.mu * self.I0 - self.alpha * self.I1 - self.beta * self.I2

    def to_dict(self) -> dict:
        return {"I0": self.I0, "I1": self.I1, "I2": self.I2, "S": self.S,
                "mu": self.mu, "alpha": self.alpha, "beta": self.beta}


def action_values(f: GeometryFields, mu: float = 1.0, alpha: float = 0.0, beta: float = 0.0) -> ActionValues:
    return ActionValues(area(f), gauss_bonnet_bulk(f), chern_integral(f)["raw"], mu, alpha, beta)


# -- Euler characteristic --------------------------------------------------


@dataclass(frozen=True)
class EulerCharacteristic:
    value: float
    bulk: float
    boundary: float
    corners: float
    advisory: str | None = None

    def to_dict(self) -> dict:
        return {"value": self.value, "bulk": self.bulk, "boundary": self.boundary,
                "corners": self.corners, "advisory": self.advisory}


def _edge_terms(f: GeometryFields):
    """Geodesic-curvature line integrals and corner turning angles of open edges.

    Each edge is a coordinate line; k uses the unit normal pointing into the
    sheet, so convex boundaries contribute positively.
    """
    g = f.grid
    Gw = worldsheet_christoffel(f.e, f.dde, f.G, f.Gamma, f.gamma_inv)  # [..., c, a, b]
    gam = f.gamma
    m0, m1 = gam.shape[:2]
    line = 0.0
    edges = []
    # edges along xi^0 (xi^1 fixed) then along xi^1 (xi^0 fixed)
    for along, closed_other in ((0, g.closed1), (1, g.closed0)):
        if closed_other:
            continue
        across = 1 - along
        n_edge = m0 if along == 0 else m1
        for pos, inward in ((0, 1.0), (-1, -1.0)):
            sl = (slice(None), pos) if along == 0 else (pos, slice(None))
            gm = gam[sl]
            G = Gw[sl]
            gaa = gm[:, along, along]
            # unit inward normal: proportional to gamma^{cb} d_b xi^across
            inv = f.gamma_inv[sl]
            nu = inv[:, :, across] * inward
            nu = nu / np.sqrt(np.einsum("na,nab,nb->n", nu, gm, nu))[:, None]
            k = np.einsum("nc,ncd,nd->n", nu, gm, G[:, :, along, along]) / gaa
            ds = np.sqrt(np.abs(gaa))
            w = stencils.trapezoid_weights(n_edge, g.h[along], g.periodic[along])
            line += float(np.sum(w * k * ds))
            edges.append((along, pos, inward))
    corners = 0.0
    if not g.closed0 and not g.closed1:
        for p0, s0 in ((0, 1.0), (-1, -1.0)):
            for p1, s1 in ((0, 1.0), (-1, -1.0)):
                gm = gam[p0, p1]
                c = s0 * s1 * gm[0, 1] / math.sqrt(gm[0, 0] * gm[1, 1])
                corners += math.pi - math.acos(max(-1.0, min(1.0, c)))
    return line, corners


def euler_characteristic(f: GeometryFields, strict: bool = False, boundary_k=None) -> EulerCharacteristic:
    """chi = (1/4 pi) [int sqrt(g) R + 2 sum_edges int k ds + 2 sum_corners (pi - angle)].

    Euclidean sheets use every open edge and the corner turning angles of the
    parameter rectangle.  Lorentzian sheets are computed from the bulk plus
    the timelike ends only and flagged advisory; ``strict=True`` refuses.
    ``boundary_k`` optionally supplies (k, dtau) arrays per end for the
    Lorentzian case.
    """
    bulk = gauss_bonnet_bulk(f)
    if f.grid.signature is Signature.EUCLIDEAN:
        line, corners = _edge_terms(f)
        value = (bulk + 2.0 * line + 2.0 * corners) / (4.0 * math.pi)
        return EulerCharacteristic(value, bulk, line, corners)
    msg = ("Lorentzian Euler characteristic omits the corner and spacelike-edge "
           "contributions; the value is not a certified integer")
    if strict:
        raise InvariantError(msg)
    line = 0.0
    for k, dtau in boundary_k or ():
        line += float(np.sum(np.asarray(k) * np.asarray(dtau)))
    return EulerCharacteristic((bulk + 2.0 * line) / (4.0 * math.pi), bulk, line, 0.0, msg)


def euler_from_values(bulk: float, boundary_line: float, corners: float = 0.0) -> float:
    """The same combination for externally supplied integrals."""
    return (bulk + 2.0 * boundary_line + 2.0 * corners) / (4.0 * math.pi)
