"""Deformations of sampled worldsheets and first variations of the action.

Finite differences of the discrete functionals are the reference; the
analytic boundary formulas in this module are checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .background import Signature
from .boundary import (
    AUDITED,
    BoundaryStrip,
    Convention,
    Couplings,
    NullEndError,
    RiemannBoundaryTable,
    boundary_frame,
    connection_action,
    end_covariant_derivative,
    eps_pair,
    formula_frame,
    orientation,
)
from .geometry import GeometryError, GeometryFields, compute_geometry, induced_metric, intrinsic_curvature
from .grid import BoundaryId, WorldsheetGrid, partial_derivatives
from .invariants import area, chern_integral, gauss_bonnet_bulk

FUNCTIONALS = ("I0", "I1", "I2", "S")


class VariationError(ValueError):
    pass


# -- deformation fields ------------------------------------------------------


def smooth_bump(r: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) on |r| < 1, zero outside; equals 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpSpec:
    """Product bump in (xi^0, xi^1) with amplitudes per component.

    ``normal`` scales Phi_1, Phi_2; ``tangent`` scales Phi^0, Phi^1.
    """

    center: tuple[float, float]
    width: tuple[float, float]
    normal: tuple[float, float] = (1.0, 0.0)
    tangent: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def parse(cls, spec: str) -> "BumpSpec":
        """``"c0,c1;w0,w1;n1,n2;t0,t1"`` (last two groups optional)."""
        parts = [p for p in spec.split(";") if p.strip()]
        if len(parts) < 2:
            raise VariationError("deformation spec needs at least 'c0,c1;w0,w1'")
        vals = [tuple(float(x) for x in p.split(",")) for p in parts]
        if any(len(v) != 2 for v in vals):
            raise VariationError(f"each group of {spec!r} must have two numbers")
        return cls(*vals)

    def shape(self, grid: WorldsheetGrid) -> np.ndarray:
        A, B = grid.core_coords()
        out = np.ones_like(A)
        for X, c, w, closed, rng in (
            (A, self.center[0], self.width[0], grid.closed0, grid.range0),
            (B, self.center[1], self.width[1], grid.closed1, grid.range1),
        ):
            d = X - c
            if closed:
                L = rng[1] - rng[0]
                d = (d + 0.5 * L) % L - 0.5 * L
            out = out * smooth_bump(d / w)
        return out


@dataclass(eq=False)
class DeformationField:
    Phi_normal: np.ndarray  # [m0, m1, i]
    Phi_tangent: np.ndarray  # [m0, m1, a]
    support: np.ndarray  # bool [m0, m1]
    epsilon: float | None = None

    def __post_init__(self):
        for name in ("Phi_normal", "Phi_tangent"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise VariationError(f"{name} has non-finite entries")
            if np.any(arr[~self.support] != 0.0):
                raise VariationError(f"{name} is nonzero outside its support mask")

    @classmethod
    def zeros(cls, grid: WorldsheetGrid) -> "DeformationField":
        shape = grid.core.shape[:2]
        return cls(np.zeros(shape + (2,)), np.zeros(shape + (2,)), np.zeros(shape, bool))

    @classmethod
    def from_bumps(cls, grid: WorldsheetGrid, bumps) -> "DeformationField":
        shape = grid.core.shape[:2]
        Pn = np.zeros(shape + (2,))
        Pt = np.zeros(shape + (2,))
        for bspec in bumps:
            s = bspec.shape(grid)
            Pn += s[..., None] * np.asarray(bspec.normal)
            Pt += s[..., None] * np.asarray(bspec.tangent)
        support = np.any(Pn != 0, axis=-1) | np.any(Pt != 0, axis=-1)
        return cls(Pn, Pt, support)

    def scaled(self, c: float) -> "DeformationField":
        return DeformationField(c * self.Phi_normal, c * self.Phi_tangent, self.support.copy(), self.epsilon)

    def is_interior(self, grid: WorldsheetGrid, collar: int = 2) -> bool:
        """True when the support avoids a ``collar``-node band at every open edge."""
        s = self.support
        if not grid.closed0 and (s[:collar].any() or s[-collar:].any()):
            return False
        if not grid.closed1 and (s[:, :collar].any() or s[:, -collar:].any()):
            return False
        return True


def displacement(f: GeometryFields, d: DeformationField) -> np.ndarray:
    """delta X^mu = Phi_i n^{i mu} + Phi^a e_a^mu on the core grid."""
    return np.einsum("...i,...im->...m", d.Phi_normal, f.normals) + np.einsum(
        "...a,...am->...m", d.Phi_tangent, f.e
    )


def apply_deformation(f: GeometryFields, d: DeformationField, eps: float) -> WorldsheetGrid:
    g = f.grid
    if eps == 0.0:
        return g
    return g.with_core(g.core + eps * displacement(f, d))


# -- functionals -------------------------------------------------------------


def functional(name: str, grid: WorldsheetGrid, couplings: Couplings | None = None) -> float:
    """Discrete I0, I1, I2 or S of a grid."""
    if name not in FUNCTIONALS:
        raise VariationError(f"unknown functional {name!r}; choose from {FUNCTIONALS}")
    if name in ("I2", "S"):
        f = compute_geometry(grid)
        if name == "I2":
            return chern_integral(f)["raw"]
        c = couplings or Couplings(1.0, 0.0, 0.0)
        return -c.mu * area(f) - c.alpha * gauss_bonnet_bulk(f) - c.beta * chern_integral(f)["raw"]
    m = induced_metric(grid)
    w = grid.weights()
    if name == "I0":
        val = np.sum(w * m.sqrt_det)
    else:
        val = np.sum(w * m.sqrt_det * intrinsic_curvature(grid, m.gamma, m.inverse))
    if not math.isfinite(val):
        raise VariationError(f"{name} is not finite on the deformed grid")
    return float(val)


def default_epsilon(f: GeometryFields, d: DeformationField) -> float:
    X = f.grid.core
    scale = float(np.max(np.ptp(X.reshape(-1, X.shape[-1]), axis=0)))
    amp = float(np.max(np.abs(displacement(f, d)))) or 1.0
    return 1e-5 * scale / amp


def fd_variation(
    name: str,
    f: GeometryFields,
    d: DeformationField,
    eps: float | None = None,
    richardson: bool = False,
    couplings: Couplings | None = None,
    max_halvings: int = 6,
) -> float:
    """Centered difference [F(X + eps dX) - F(X - eps dX)] / (2 eps)."""
    eps = eps or d.epsilon or default_epsilon(f, d)

    def central(e):
        for _ in range(max_halvings):
            try:
                plus = functional(name, apply_deformation(f, d, e), couplings)
                minus = functional(name, apply_deformation(f, d, -e), couplings)
                return (plus - minus) / (2.0 * e)
            except GeometryError:
                e *= 0.5
        raise VariationError("deformed grid stays degenerate; reduce the deformation")

    if not richardson:
        return central(eps)
    return (4.0 * central(0.5 * eps) - central(eps)) / 3.0


# -- analytic formulas -------------------------------------------------------


def _ends(f: GeometryFields):
    if f.grid.closed1:
        return []
    return [BoundaryId.XI1_MIN, BoundaryId.XI1_MAX]


def _edge(b: BoundaryId) -> int:
    return 0 if b is BoundaryId.XI1_MIN else -1


def _strips(f: GeometryFields, strips):
    if strips is not None:
        return strips
    out = {}
    for b in _ends(f):
        try:
            out[b.value] = boundary_frame(f, b)
        except NullEndError as exc:
            out[b.value] = exc
    return out


def analytic_variation_I0(
    f: GeometryFields, d: DeformationField, convention: Convention = AUDITED, strips=None
) -> dict:
    """bulk = int sqrt|g| K^i Phi_i, boundary = sum over ends of int eta_a Phi^a dtau."""
    Kp = convention.s_K * f.Kmean
    bulk = float(np.sum(f.grid.weights() * f.sqrt_det * np.einsum("...i,...i->...", Kp, d.Phi_normal)))
    boundary, refused = 0.0, []
    for name, s in _strips(f, strips).items():
        j = _edge(BoundaryId(name))
        Phi_t = d.Phi_tangent[:, j]
        if isinstance(s, Exception):
            if np.any(Phi_t != 0):
                refused.append(name)
            continue
        eta_low = np.einsum("nab,nb->na", s.gamma, convention.s_eta * s.eta)
        boundary += float(np.sum(s.dtau * np.einsum("na,na->n", eta_low, Phi_t)))
    return {"bulk": bulk, "boundary": boundary, "total": bulk + boundary, "refused_ends": refused}


def analytic_tangential_variation(
    f: GeometryFields, d: DeformationField, couplings: Couplings, convention: Convention = AUDITED, strips=None
) -> float:
    """-sum over ends of int (mu + alpha R + beta Omega) eta^a Phi_a dtau."""
    total = 0.0
    for name, s in _strips(f, strips).items():
        if isinstance(s, Exception):
            continue
        j = _edge(BoundaryId(name))
        ff = formula_frame(s, convention)
        eta_low = np.einsum("nab,nb->na", s.gamma, ff.eta)
        L = couplings.mu + couplings.alpha * ff.R + couplings.beta * ff.Omega
        total -= float(np.sum(s.dtau * L * np.einsum("na,na->n", eta_low, d.Phi_tangent[:, j])))
    return total


def _normal_data(f: GeometryFields, d: DeformationField, s: BoundaryStrip, j: int, eta_f: np.ndarray):
    """Phi^i and its O(2)-covariant derivative along eta_f at the end."""
    g = f.grid
    dPhi = np.stack([g.d(d.Phi_normal, 0), g.d(d.Phi_normal, 1)], axis=-2)[:, j]  # [n, a, i]
    Phi = d.Phi_normal[:, j]
    om = f.omega[:, j]  # [n, a]
    cov = dPhi - np.stack([connection_action(om[:, a], Phi) for a in range(2)], axis=1)
    return Phi, np.einsum("na,nai->ni", eta_f, cov)


def _check_end(s, name):
    if isinstance(s, Exception):
        raise NullEndError(f"end {name} is null; boundary variation undefined there", getattr(s, "nodes", ()))


def analytic_boundary_variation_I1(
    f: GeometryFields,
    d: DeformationField,
    convention: Convention = AUDITED,
    tables: dict | None = None,
    strips=None,
) -> float:
    """2 sum_ends int [K_par . nabla~_eta Phi + (D~ K_mix + T1) . Phi] dtau."""
    if not f.grid.bg.flat and f.grid.bg.kind.value != "constant_curvature" and tables is None:
        raise VariationError("general background needs Riemann boundary tables")
    total = 0.0
    for name, s in _strips(f, strips).items():
        j = _edge(BoundaryId(name))
        if isinstance(s, Exception):
            if np.any(d.Phi_normal[:, j] != 0):
                _check_end(s, name)
            continue
        ff = formula_frame(s, convention)
        Phi, dnPhi = _normal_data(f, d, s, j, ff.eta)
        DK = end_covariant_derivative(s, ff.K_mix)
        if tables and name in tables:
            DK = DK + tables[name].vevn
        integrand = np.sum(ff.K_par * dnPhi, -1) + np.sum(DK * Phi, -1)
        total += 2.0 * float(np.sum(s.dtau * integrand))
    return total


def analytic_boundary_variation_I2(
    f: GeometryFields,
    d: DeformationField,
    convention: Convention = AUDITED,
    tables: dict | None = None,
    strips=None,
) -> float:
    """sum_ends int o [2 eps_ij (K_mix^j nabla~_eta Phi^i + D~K_par^j Phi^i) + T2 . Phi] dtau.

    o = +1 where eps^{ab} eta_b is the future tangent, -1 where it is the past one.
    """
    if not f.grid.bg.flat and f.grid.bg.kind.value != "constant_curvature" and tables is None:
        raise VariationError("general background needs Riemann boundary tables")
    total = 0.0
    for name, s in _strips(f, strips).items():
        j = _edge(BoundaryId(name))
        if isinstance(s, Exception):
            if np.any(d.Phi_normal[:, j] != 0):
                _check_end(s, name)
            continue
        ff = formula_frame(s, convention)
        Phi, dnPhi = _normal_data(f, d, s, j, ff.eta)
        DKp = end_covariant_derivative(s, ff.K_par)
        sgn = ff.eps  # s_eps * o
        integrand = 2.0 * sgn * (eps_pair(dnPhi, ff.K_mix) + eps_pair(Phi, DKp))
        if tables and name in tables:
            integrand = integrand + orientation(s, ff.eta) * np.sum(tables[name].nnnv * Phi, -1)
        total += float(np.sum(s.dtau * integrand))
    return total


def variation_table(
    f: GeometryFields,
    d: DeformationField,
    couplings: Couplings,
    convention: Convention = AUDITED,
    richardson: bool = False,
) -> dict:
    """FD and analytic values side by side for every functional."""
    strips = _strips(f, None)
    fd = {n: fd_variation(n, f, d, richardson=richardson, couplings=couplings) for n in FUNCTIONALS}
    i0 = analytic_variation_I0(f, d, convention, strips)
    i1 = analytic_boundary_variation_I1(f, d, convention, strips=strips)
    i2 = analytic_boundary_variation_I2(f, d, convention, strips=strips)
    S = -couplings.mu * i0["total"] - couplings.alpha * i1 - couplings.beta * i2
    if np.any(d.Phi_tangent != 0):
        S = None  # tangential parts of I1, I2 are reported through the tangential formula
    return {
        "fd": fd,
        "analytic": {"I0": i0["total"], "I0_bulk": i0["bulk"], "I0_boundary": i0["boundary"],
                     "I1": i1, "I2": i2, "S": S,
                     "S_tangential": analytic_tangential_variation(f, d, couplings, convention, strips)},
        "interior": d.is_interior(f.grid),
    }
