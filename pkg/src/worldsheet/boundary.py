"""End-worldline frames, curvature projections and boundary-condition residuals.

Quantities stored on a :class:`BoundaryStrip` are in the *code frame*:
``eta`` points into the sheet, ``K_*`` use K_ab^i = g(n^i, D_a e_b) and the
normal symbol epsilon_{12} = +1 in the seed ordering.  A :class:`Convention`
maps them to the frame in which the boundary-condition formulas are written;
:func:`sign_audit` determines that map against the finite-difference oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import stencils
from .background import Signature, riemann_at
from .geometry import EPS2, GeometryFields, worldsheet_christoffel
from .grid import BoundaryId, WorldsheetGrid, boundary_nodes

NULL_THRESHOLD = 1e-6


class BoundaryError(ValueError):
    pass


class NullEndError(BoundaryError):
    """The end worldline is (numerically) null at the listed nodes."""

    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = list(nodes)


class ConsistencyError(BoundaryError):
    pass


class InvalidCouplings(BoundaryError):
    pass


class MissingRiemannTable(BoundaryError):
    pass


@dataclass(frozen=True)
class Couplings:
    mu: float
    alpha: float
    beta: float
    M: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidCouplings("tension mu must be positive")
        if not all(math.isfinite(x) for x in (self.alpha, self.beta, self.M)):
            raise InvalidCouplings("couplings must be finite")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "alpha": self.alpha, "beta": self.beta, "M": self.M}


@dataclass(frozen=True)
class Convention:
    """Signs relating code-frame boundary quantities to the formula frame.

    eta_formula = s_eta * eta_inward, K_formula = s_K * K_code,
    eps_formula = s_eps * eps_code.  ``sigma`` multiplies the curvature
    terms of the first boundary condition, r1 = mu + sigma (alpha R + beta Omega) + M k.
    """

    s_eta: int = -1
    s_K: int = -1
    s_eps: int = 1
    sigma: int = -1

    def to_dict(self) -> dict:
        return {"s_eta": self.s_eta, "s_K": self.s_K, "s_eps": self.s_eps, "sigma": self.sigma,
                "eta": "outward" if self.s_eta < 0 else "inward",
                "K": "g(n, D e)" if self.s_K > 0 else "-g(n, D e)"}


# Fixed by sign_audit on the twisted cylinder; the test-suite re-runs the audit.
AUDITED = Convention()


@dataclass(frozen=True)
class RiemannBoundaryTable:
    """Per-node projections R(v, eta, v, n^i) and R(n^k, n^l, n^i, v) eps_kl."""

    vevn: np.ndarray
    nnnv: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "RiemannBoundaryTable":
        return cls(np.zeros((n, 2)), np.zeros((n, 2)))

    @classmethod
    def from_dict(cls, d: dict) -> "RiemannBoundaryTable":
        a, b = np.asarray(d["vevn"], float), np.asarray(d["nnnv"], float)
        if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 2:
            raise BoundaryError("Riemann table entries must have shape (n, 2)")
        return cls(a, b)


@dataclass(eq=False)
class BoundaryStrip:
    boundary: str
    nodes: list
    inward: int
    v: np.ndarray  # [n, a]
    eta: np.ndarray  # [n, a], pointing into the sheet
    gamma: np.ndarray  # [n, a, b]
    dtau: np.ndarray  # quadrature weights in proper time
    tau_rate: np.ndarray  # d tau / d xi^0
    h: float
    periodic: bool
    K_par: np.ndarray  # [n, i]
    K_mix: np.ndarray
    K_perp: np.ndarray
    k: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    twist: np.ndarray  # v^a omega_a^{12}
    normals: np.ndarray | None = None  # [n, i, mu]
    e: np.ndarray | None = None  # [n, a, mu]
    signature: Signature = Signature.LORENTZIAN
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.k)

    def completeness_residual(self) -> float:
        vl = np.einsum("nab,nb->na", self.gamma, self.v)
        el = np.einsum("nab,nb->na", self.gamma, self.eta)
        sv = -1.0 if self.signature is Signature.LORENTZIAN else 1.0
        rec = np.einsum("na,nb->nab", el, el) + sv * np.einsum("na,nb->nab", vl, vl)
        return float(np.max(np.abs(self.gamma - rec)))

    def orthogonality_residual(self) -> float:
        return float(np.max(np.abs(np.einsum("na,nab,nb->n", self.v, self.gamma, self.eta))))

    def flipped(self) -> "BoundaryStrip":
        """Same strip with eta reversed."""
        return replace(self, eta=-self.eta, K_mix=-self.K_mix, k=-self.k, inward=-self.inward)


# -- construction ----------------------------------------------------------


def _edge_slice(grid: WorldsheetGrid, b: BoundaryId):
    nodes, inward = boundary_nodes(grid, b)
    j = nodes[0][1]
    return nodes, inward, (0 if j == 0 else -1)


def classify_end(grid: WorldsheetGrid, b: BoundaryId | str) -> dict:
    """Null test for an end from the sampled edge alone (no metric inversion).

    |gamma(t, t)| / max|gamma| is Richardson-extrapolated from the h and 2h
    edge stencils; a node is null when that value falls below the fixed
    threshold or below twice the estimated truncation error.
    """
    from .background import metric_at

    b = BoundaryId(b)
    nodes, inward, j = _edge_slice(grid, b)
    Xc = grid.core
    edge = Xc[:, j]
    G = metric_at(grid.bg, edge)
    h0, per = grid.h0, grid.closed0
    t_h = stencils.diff(edge, 0, h0, per)
    gtt_h = np.einsum("nm,nmk,nk->n", t_h, G, t_h)
    # ||gamma||_inf over the whole sheet, formed without inverting anything
    from .geometry import tangent_metric
    from .grid import partial_derivatives

    scale = np.max(np.abs(tangent_metric(partial_derivatives(grid, 1), metric_at(grid.bg, Xc))))
    rel = np.abs(gtt_h) / scale
    err = np.zeros_like(rel)
    m = edge.shape[0]
    if not per and m % 2 == 1 and (m + 1) // 2 >= 5:
        # Richardson with the 2h stencil on every other node, interpolated back
        t_2h = stencils.diff(edge[::2], 0, 2 * h0, False)
        gtt_2h = np.einsum("nm,nmk,nk->n", t_2h, G[::2], t_2h)
        rich = (4.0 * gtt_h[::2] - gtt_2h) / 3.0
        pos = np.arange(m)
        rel = np.interp(pos, pos[::2], np.abs(rich)) / scale
        err = np.interp(pos, pos[::2], np.abs(gtt_h[::2] - rich)) / scale
    null = rel < np.maximum(NULL_THRESHOLD, 2.0 * err)
    return {
        "boundary": b.value,
        "null_nodes": [nodes[i] for i in np.flatnonzero(null)],
        "relative_norm": rel,
        "error_estimate": err,
        "null": bool(np.all(null)),
        "partially_null": bool(np.any(null) and not np.all(null)),
    }


def boundary_frame(f: GeometryFields | WorldsheetGrid, b: BoundaryId | str) -> BoundaryStrip:
    """Orthonormal end frame (v, eta), projections and geodesic curvature."""
    from .geometry import compute_geometry

    grid = f if isinstance(f, WorldsheetGrid) else f.grid
    b = BoundaryId(b)
    cls = classify_end(grid, b)
    if cls["null_nodes"]:
        raise NullEndError(
            f"end {b.value} is null at {len(cls['null_nodes'])} node(s); "
            "the end moves at the speed of light and has no unit tangent",
            nodes=cls["null_nodes"],
        )
    if isinstance(f, WorldsheetGrid):
        f = compute_geometry(f)
    nodes, inward, j = _edge_slice(grid, b)
    gam = f.gamma[:, j]
    lorentz = grid.signature is Signature.LORENTZIAN
    g00 = gam[:, 0, 0]
    if lorentz and np.any(g00 >= 0):
        raise BoundaryError(f"end {b.value} is not timelike at {np.flatnonzero(g00 >= 0).tolist()}")
    rate = np.sqrt(np.abs(g00))
    n = len(rate)
    v = np.stack([1.0 / rate, np.zeros(n)], axis=-1)
    eta = np.stack([-gam[:, 0, 1], gam[:, 0, 0]], axis=-1)
    eta = eta / np.sqrt(np.einsum("na,nab,nb->n", eta, gam, eta))[:, None]
    eta = eta * np.sign(eta[:, 1] * inward)[:, None]

    K = f.K[:, j]
    K_par = np.einsum("na,nb,nabi->ni", v, v, K)
    K_mix = np.einsum("na,nb,nabi->ni", v, eta, K)
    K_perp = np.einsum("na,nb,nabi->ni", eta, eta, K)

    # k = eta_c (d_tau v^c + Gamma^c_ab v^a v^b)
    Gw = worldsheet_christoffel(f.e, f.dde, f.G, f.Gamma, f.gamma_inv)[:, j]
    dv = stencils.diff(v, 0, grid.h0, grid.closed0) / rate[:, None]
    acc = dv + np.einsum("ncab,na,nb->nc", Gw, v, v)
    k = np.einsum("nc,ncd,nd->n", acc, gam, eta)

    w = stencils.trapezoid_weights(n, grid.h0, grid.closed0)
    twist = np.einsum("na,na->n", v, f.omega[:, j])
    return BoundaryStrip(
        boundary=b.value, nodes=nodes, inward=inward, v=v, eta=eta, gamma=gam,
        dtau=w * rate, tau_rate=rate, h=grid.h0, periodic=grid.closed0,
        K_par=K_par, K_mix=K_mix, K_perp=K_perp, k=k,
        R=f.R[:, j].copy(), Omega=f.Omega[:, j].copy(), twist=twist,
        normals=f.normals[:, j].copy(), e=f.e[:, j].copy(), signature=grid.signature,
    )


def end_strips(f: GeometryFields) -> dict:
    """Strips for both ends; null ends are reported as findings instead."""
    out = {}
    for b in BoundaryId:
        try:
            out[b.value] = boundary_frame(f, b)
        except NullEndError as exc:
            out[b.value] = exc
    return out


def curvature_projections(strip: BoundaryStrip, K: np.ndarray | None = None):
    """(K_par, K_mix, K_perp) of ``K`` [n, a, b, i] on the strip frame."""
    if K is None:
        return strip.K_par, strip.K_mix, strip.K_perp
    v, eta = strip.v, strip.eta
    return (
        np.einsum("na,nb,nabi->ni", v, v, K),
        np.einsum("na,nb,nabi->ni", v, eta, K),
        np.einsum("na,nb,nabi->ni", eta, eta, K),
    )


def geodesic_curvature(strip: BoundaryStrip) -> np.ndarray:
    return strip.k


# -- covariant derivative along the end --------------------------------------


def connection_action(twist: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(omega^{ij} f^j) for omega^{12} = twist."""
    return np.stack([twist * f[:, 1], -twist * f[:, 0]], axis=-1)


def end_covariant_derivative(strip: BoundaryStrip, f: np.ndarray) -> np.ndarray:
    """D~ f^i = d_tau f^i - (v^a omega_a)^{ij} f^j along the end."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] < 5:
        raise BoundaryError("end derivative needs at least 5 boundary nodes")
    dtau = stencils.diff(f, 0, strip.h, strip.periodic) / strip.tau_rate[:, None]
    return dtau - connection_action(strip.twist, f)


# -- formula frame -------------------------------------------------------


def eps_apply(x: np.ndarray) -> np.ndarray:
    """(eps^{ij} x_j) with eps^{12} = +1."""
    return np.stack([x[:, 1], -x[:, 0]], axis=-1)


def eps_pair(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """eps_ij x^i y^j."""
    return x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]


def orientation(strip: BoundaryStrip, eta: np.ndarray) -> np.ndarray:
    """o = +1 where eps^{ab} eta_b equals v (tensor eps^{01} = +1/sqrt|gamma|), else -1."""
    det = strip.gamma[:, 0, 0] * strip.gamma[:, 1, 1] - strip.gamma[:, 0, 1] ** 2
    el = np.einsum("nab,nb->na", strip.gamma, eta)
    w = np.stack([el[:, 1], -el[:, 0]], axis=-1) / np.sqrt(np.abs(det))[:, None]
    gwv = np.einsum("na,nab,nb->n", w, strip.gamma, strip.v)
    gvv = np.einsum("na,nab,nb->n", strip.v, strip.gamma, strip.v)
    return np.sign(gwv / gvv)


@dataclass(eq=False)
class FormulaFrame:
    eta: np.ndarray
    K_par: np.ndarray
    K_mix: np.ndarray
    K_perp: np.ndarray
    k: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    eps: np.ndarray  # effective sign of eps_ij in the boundary formulas, per node
    convention: Convention


def formula_frame(strip: BoundaryStrip, c: Convention = AUDITED) -> FormulaFrame:
    eta = c.s_eta * strip.eta
    o = orientation(strip, eta)
    return FormulaFrame(
        eta=eta,
        K_par=c.s_K * strip.K_par,
        K_mix=c.s_K * c.s_eta * strip.K_mix,
        K_perp=c.s_K * strip.K_perp,
        k=c.s_eta * strip.k,
        R=strip.R,
        Omega=c.s_eps * strip.Omega,
        eps=c.s_eps * o,
        convention=c,
    )


def boundary_curvatures(ff: FormulaFrame) -> dict:
    """R and Omega at the end assembled from the projections (flat background)."""
    R = 2.0 * (np.sum(ff.K_mix**2, -1) - np.sum(ff.K_par * ff.K_perp, -1))
    Omega = 2.0 * ff.eps * eps_pair(ff.K_mix, ff.K_par + ff.K_perp)
    return {"R": R, "Omega": Omega}


# -- boundary conditions ---------------------------------------------------


def riemann_table(f: GeometryFields, strip: BoundaryStrip, c: Convention = AUDITED) -> RiemannBoundaryTable:
    """Riemann projections for the sampled background (zero for constant curvature)."""
    g = f.grid
    j = 0 if strip.inward > 0 else -1
    riem = riemann_at(g.bg, g.core[:, j])
    vm = np.einsum("na,nam->nm", strip.v, strip.e)
    em = np.einsum("na,nam->nm", c.s_eta * strip.eta, strip.e)
    n = strip.normals
    vevn = np.einsum("nabcd,na,nb,nc,nid->ni", riem, vm, em, vm, n)
    nnnv = np.einsum("nabcd,kl,nka,nlb,nic,nd->ni", riem, EPS2 * c.s_eps, n, n, n, vm)
    return RiemannBoundaryTable(vevn, nnnv)


def bc_residuals(
    strip: BoundaryStrip,
    couplings: Couplings,
    table: RiemannBoundaryTable | None = None,
    convention: Convention = AUDITED,
    flat_background: bool = True,
) -> dict:
    """r1, r2^i, r3^i per node.

    r1 = mu + sigma (alpha R + beta Omega) + M k
    r3 = (alpha + M/2) K_par + beta eps K_mix
    r2 = D~[alpha K_mix + beta eps K_par (+ alpha T1 + beta/2 T2 from the table)]
    """
    if not flat_background and table is None:
        raise MissingRiemannTable("a general background needs a Riemann boundary table")
    ff = formula_frame(strip, convention)
    a, b, M = couplings.alpha, couplings.beta, couplings.M
    s = convention.sigma
    r1 = couplings.mu + s * (a * ff.R + b * ff.Omega) + M * ff.k
    e = ff.eps[:, None]
    r3 = (a + 0.5 * M) * ff.K_par + b * e * eps_apply(ff.K_mix)
    inner = a * ff.K_mix + b * e * eps_apply(ff.K_par)
    if table is not None and (np.any(table.vevn) or np.any(table.nnnv)):
        inner = inner + a * table.vevn + (0.5 * b) * table.nnnv
    r2 = end_covariant_derivative(strip, inner)
    return {"r1": r1, "r2": r2, "r3": r3}


def residual_norms(res: dict, dtau: np.ndarray) -> dict:
    out = {}
    for key, r in res.items():
        r = np.asarray(r)
        sq = r**2 if r.ndim == 1 else np.sum(r**2, axis=-1)
        out[key] = {
            "linf": float(np.max(np.sqrt(sq))),
            "l2": float(math.sqrt(np.sum(sq * np.abs(dtau)) / max(np.sum(np.abs(dtau)), 1e-300))),
        }
    return out


def predicted_boundary_values(couplings: Couplings, convention: Convention = AUDITED, k: float = 0.0) -> dict:
    """End values of |K_par|^2, R and Omega fixed by the boundary conditions.

    beta != 0: closed forms mu b^2 / (2a(a^2+b^2)), (mu/a)(a^2-b^2)/(a^2+b^2),
    2 mu b/(a^2+b^2); these solve r1 = 0 with sigma = -1.  With an end mass the
    norm follows from r1 with alpha' = alpha + M/2 in r3.  beta = 0: K_par = 0
    and R = -(mu + M k)/(sigma alpha).
    """
    mu, a, b, M = couplings.mu, couplings.alpha, couplings.beta, couplings.M
    s = convention.sigma
    lit = {"sigma_literal": 1, "sigma_used": s, "disagrees_with_literal_sign": s != 1}
    if b == 0.0:
        if a == 0.0:
            raise ConsistencyError("alpha = beta = 0 leaves mu + M k = 0, impossible for generic ends")
        R = -(mu + M * k) / (s * a)
        if R < 0:
            raise ConsistencyError("beta = 0 requires R = 2 |K_mix|^2 >= 0 at the end")
        return {"branch": "beta_zero", "K_par_norm2": 0.0, "R": R, "Omega": 0.0, "K_mix_norm2": 0.5 * R, **lit}
    ap = a + 0.5 * M
    # b3 gives |K_mix|^2 = (ap/b)^2 N; the end curvatures then follow and r1 = 0 fixes N
    A = 2.0 * a * (ap * ap - b * b) / (b * b) + 4.0 * ap
    if A == 0.0 or (M == 0.0 and a <= 0.0):
        raise ConsistencyError("alpha > 0 is necessary for a consistent end when beta != 0")
    N = -(mu + M * k) / (s * A)
    if N < 0:
        raise ConsistencyError("couplings give a negative |K_par|^2 at the end")
    out = {"branch": "generic" if M == 0.0 else "massive", "K_par_norm2": N,
           "R": 2.0 * (ap * ap / (b * b) - 1.0) * N, "Omega": 4.0 * (ap / b) * N,
           "K_mix_norm2": (ap / b) ** 2 * N, **lit}
    if M == 0.0 and s == -1:
        den = a * a + b * b
        out["closed_form"] = {"K_par_norm2": mu * b * b / (2.0 * a * den),
                              "R": (mu / a) * (a * a - b * b) / den, "Omega": 2.0 * mu * b / den}
    if M != 0.0:
        out["k"] = k
    return out


def predicted_r1(couplings: Couplings, sigma: int) -> float:
    """r1 with the closed-form R and Omega substituted (massless, beta != 0)."""
    mu, a, b = couplings.mu, couplings.alpha, couplings.beta
    den = a * a + b * b
    R = (mu / a) * (a * a - b * b) / den
    Om = 2.0 * mu * b / den
    return mu + sigma * (a * R + b * Om)


# -- sign audit ------------------------------------------------------------


@dataclass(frozen=True)
class AuditRecord:
    convention: Convention
    matches: list
    checks: dict
    sigma_r1: dict

    @property
    def unique(self) -> bool:
        return len(self.matches) == 1

    def to_dict(self) -> dict:
        return {
            "convention": self.convention.to_dict() if self.convention else None,
            "unique": self.unique,
            "matching_assignments": [m.to_dict() for m in self.matches],
            "checks": self.checks,
            "r1_sign": self.sigma_r1,
        }


class AuditFailure(BoundaryError):
    pass


def sign_audit(oracle: dict | None = None, analytic=None, rtol: float = 0.02,
               couplings: Couplings = Couplings(1.0, 1.0, 1.0)) -> AuditRecord:
    """Choose (s_eta, s_K, s_eps) so analytic boundary variations match the oracle.

    ``oracle`` maps check names to finite-difference values and ``analytic``
    is a callable ``(convention) -> {name: value}``.  The r1 sign is fixed
    algebraically by substituting the closed-form end values.  With no
    oracle (everything zero) the audit passes vacuously with the default.
    """
    sig = {s: predicted_r1(couplings, s) for s in (1, -1)}
    sig_ok = [s for s, r in sig.items() if abs(r) <= 1e-12 * couplings.mu]
    sigma_rec = {"r1_literal": sig[1], "r1_flipped": sig[-1], "sigma": sig_ok[0] if sig_ok else None,
                 "literal_sign_consistent": 1 in sig_ok}
    sigma = sig_ok[0] if sig_ok else AUDITED.sigma
    if not oracle:
        c = replace(AUDITED, sigma=sigma)
        return AuditRecord(c, [c], {}, sigma_rec)
    matches, checks = [], {}
    scale = max(abs(x) for x in oracle.values())
    for se, sk, sp in product((1, -1), repeat=3):
        c = Convention(se, sk, sp, sigma)
        vals = analytic(c)
        ok = True
        rel = {}
        for name, fd in oracle.items():
            err = abs(vals[name] - fd) / max(abs(fd), 1e-3 * scale)
            rel[name] = err
            ok = ok and err <= rtol
        checks[f"{se:+d},{sk:+d},{sp:+d}"] = rel
        if ok:
            matches.append(c)
    if not matches:
        raise AuditFailure(f"no sign assignment reconciles the analytic formulas with the oracle: {checks}")
    return AuditRecord(matches[0], matches, checks, sigma_rec)
