"""Catalog of analytic embeddings with known geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .background import BackgroundSpacetime, Kind, Signature
from .grid import WorldsheetGrid, from_generator

TWO_PI = 2.0 * math.pi


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    defaults: dict
    signature: Signature
    build: Callable[[dict], tuple]  # params -> (fn, range0, range1, closed0, closed1)
    facts: Callable[[dict], dict] = field(default=lambda p: {})
    validate: Callable[[dict], None] = field(default=lambda p: None)


def _stack(*comps):
    comps = np.broadcast_arrays(*comps)
    return np.stack(comps, axis=-1)


def _warp(x, lo, hi, w):
    """Monotone reparametrization of [lo, hi] onto itself fixing both ends.

    Same surface, but breaks the translation symmetry of the sampling that
    otherwise cancels the leading h**2 error of the stencils.
    """
    if w == 0.0:
        return x
    L = hi - lo
    return x + w * L / TWO_PI * np.sin(TWO_PI * (x - lo) / L)


def _warped(fn, p, range0, range1):
    w = p.get("warp", 0.0)
    if not w:
        return fn
    return lambda a, b: fn(_warp(a, *range0, w), _warp(b, *range1, w))


def _check_warp(p):
    if abs(p.get("warp", 0.0)) >= 1.0:
        raise CatalogError("warp must satisfy |warp| < 1")


def _plane(p):
    fn = lambda a, b: _stack(a, b, 0.0 * a, 0.0 * a)
    return fn, p["range0"], p["range1"], False, False


def _cylinder(p):
    r, lam = p["r"], p["twist"]
    fn = lambda a, b: _stack(a, r * np.cos(b + lam * a), r * np.sin(b + lam * a), 0.0 * a)
    closed1 = bool(p.get("closed", False))
    return _warped(fn, p, p["range0"], p["range1"]), p["range0"], p["range1"], False, closed1


def _check_cylinder(p):
    _check_warp(p)
    if p["r"] <= 0:
        raise CatalogError("cylinder radius must be positive")
    if abs(p["twist"]) * p["r"] >= 1.0:
        raise CatalogError("cylinder twist * r must be < 1 for timelike ends")
    if p.get("closed") and not math.isclose(p["range1"][1] - p["range1"][0], TWO_PI):
        raise CatalogError("closed cylinder needs a 2 pi range in xi^1")


def _rod(p):
    d = p["delta"]
    fn = lambda a, b: _stack(a, np.cos(b) * np.cos(a), np.cos(b) * np.sin(a), 0.0 * a)
    return _warped(fn, p, p["range0"], (d, math.pi - d)), p["range0"], (d, math.pi - d), False, False


def _check_rod(p):
    _check_warp(p)
    if not 0.0 <= p["delta"] < 0.5 * math.pi:
        raise CatalogError("rotating_rod delta must lie in [0, pi/2)")


def _sphere_cap(p):
    r = p["r"]
    fn = lambda a, b: _stack(
        r * np.sin(a) * np.cos(b), r * np.sin(a) * np.sin(b), r * np.cos(a), 0.0 * a
    )
    closed1 = math.isclose(p["phi_range"][1] - p["phi_range"][0], TWO_PI)
    return _warped(fn, p, p["theta_range"], p["phi_range"]), p["theta_range"], p["phi_range"], False, closed1


def _check_cap(p):
    _check_warp(p)
    t0, t1 = p["theta_range"]
    if not (0.0 < t0 < t1 < math.pi):
        raise CatalogError("sphere_cap theta_range must avoid the poles")


def _disk(p):
    fn = lambda a, b: _stack(a * np.cos(b), a * np.sin(b), 0.0 * a, 0.0 * a)
    return fn, p["rho_range"], p["phi_range"], False, False


def _check_disk(p):
    r0, r1 = p["rho_range"]
    f0, f1 = p["phi_range"]
    if not (0.0 < r0 < r1) or not (0.0 < f1 - f0 < TWO_PI):
        raise CatalogError("disk sector needs 0 < rho0 < rho1 and an opening angle below 2 pi")


def _torus(p):
    R, r = p["R"], p["r"]
    fn = lambda a, b: _stack(
        (R + r * np.cos(b)) * np.cos(a), (R + r * np.cos(b)) * np.sin(a), r * np.sin(b), 0.0 * a
    )
    return fn, (0.0, TWO_PI), (0.0, TWO_PI), True, True


def _check_torus(p):
    if not (0.0 < p["r"] < p["R"]):
        raise CatalogError("torus needs 0 < r < R")


def _bump2(a, b, c0, c1, w):
    return np.exp(-((a - c0) ** 2 + (b - c1) ** 2) / w**2)


def _clifford(p):
    r, A, w = p["r"], p["bump"], p["bump_width"]

    def fn(a, b):
        # radial bump along the first normal direction keeps the surface immersed
        s = 1.0 + A * _bump2(a, b, math.pi, math.pi, w)
        return _stack(r * s * np.cos(a), r * s * np.sin(a), r * np.cos(b), r * np.sin(b))

    return fn, (0.0, TWO_PI), (0.0, TWO_PI), True, True


def _graph_bump(p):
    A, w = p["amplitude"], p["width"]
    (a0, a1), (b0, b1) = p["range0"], p["range1"]
    c0, c1 = 0.5 * (a0 + a1), 0.5 * (b0 + b1)

    def fn(a, b):
        u = A * _bump2(a, b, c0, c1, w)
        v = A * _bump2(a, b, c0 + 0.3 * w, c1 - 0.2 * w, w) * np.sin(3.0 * (b - c1) / w)
        return _stack(a, b, u, v)

    return fn, p["range0"], p["range1"], False, False


def _facts_plane(p):
    return {"K_zero": True, "R": 0.0, "Omega_tilde": 0.0, "extremal": True, "chern_raw": 0.0}


def _facts_cylinder(p):
    r, lam = p["r"], p["twist"]
    return {
        "gamma": [[-1.0 + (r * lam) ** 2, r * r * lam], [r * r * lam, r * r]],
        "mean_curvature_norm": 1.0 / r,
        "R": 0.0,
        "Omega_tilde": 0.0,
        "extremal": False,
        "chern_raw": 0.0,
    }


def _facts_rod(p):
    return {"gamma": "sin(xi1)^2 diag(-1, 1)", "extremal": True, "null_ends": p["delta"] == 0.0}


def _facts_cap(p):
    r = p["r"]
    t0, t1 = p["theta_range"]
    f0, f1 = p["phi_range"]
    facts = {
        "R": 2.0 / r**2,
        "gauss_bonnet_bulk": 2.0 * (f1 - f0) * (math.cos(t0) - math.cos(t1)),
        "chern_raw": 0.0,
    }
    facts["euler_characteristic"] = 0 if math.isclose(f1 - f0, TWO_PI) else 1
    return facts


CATALOG: dict[str, CatalogEntry] = {
    "plane": CatalogEntry(
        "plane", {"range0": (0.0, 1.0), "range1": (0.0, 1.0)}, Signature.LORENTZIAN, _plane, _facts_plane
    ),
    "strip": CatalogEntry(
        "strip", {"range0": (0.0, 2.0), "range1": (0.0, 1.0)}, Signature.LORENTZIAN, _plane, _facts_plane
    ),
    "cylinder": CatalogEntry(
        "cylinder",
        {"r": 2.0, "twist": 0.0, "range0": (0.0, 1.0), "range1": (0.0, TWO_PI), "closed": False, "warp": 0.0},
        Signature.LORENTZIAN,
        _cylinder,
        _facts_cylinder,
        _check_cylinder,
    ),
    "rotating_rod": CatalogEntry(
        "rotating_rod",
        {"delta": 0.3, "range0": (0.0, 1.0), "warp": 0.0},
        Signature.LORENTZIAN,
        _rod,
        _facts_rod,
        _check_rod,
    ),
    "sphere_cap": CatalogEntry(
        "sphere_cap",
        {"r": 1.0, "theta_range": (0.2, 0.5 * math.pi), "phi_range": (0.0, TWO_PI), "warp": 0.0},
        Signature.EUCLIDEAN,
        _sphere_cap,
        _facts_cap,
        _check_cap,
    ),
    "disk": CatalogEntry(
        "disk",
        {"rho_range": (0.5, 1.0), "phi_range": (0.0, 1.5 * math.pi)},
        Signature.EUCLIDEAN,
        _disk,
        lambda p: {"R": 0.0, "euler_characteristic": 1, "chern_raw": 0.0},
        _check_disk,
    ),
    "torus": CatalogEntry(
        "torus",
        {"R": 2.0, "r": 1.0},
        Signature.EUCLIDEAN,
        _torus,
        lambda p: {"euler_characteristic": 0, "chern_raw": 0.0, "gauss_bonnet_bulk": 0.0},
        _check_torus,
    ),
    "clifford_torus": CatalogEntry(
        "clifford_torus",
        {"r": 1.0 / math.sqrt(2.0), "bump": 0.0, "bump_width": 0.6},
        Signature.EUCLIDEAN,
        _clifford,
        lambda p: {"euler_characteristic": 0, "chern_raw": 0.0, "gauss_bonnet_bulk": 0.0},
    ),
    "graph_bump": CatalogEntry(
        "graph_bump",
        {"amplitude": 0.1, "width": 0.25, "range0": (0.0, 1.0), "range1": (0.0, 1.0)},
        Signature.LORENTZIAN,
        _graph_bump,
        lambda p: {"chern_raw_closed": None},
    ),
}


def instantiate(name: str, params: dict | None = None, resolution=(33, 33), R_ambient: float = 0.0) -> WorldsheetGrid:
    """Sample catalog embedding ``name`` on an ``n0 x n1`` grid.

    ``R_ambient`` != 0 places a Lorentzian entry in the constant-curvature
    background of that scalar curvature (conformally flat chart).
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown catalog entry {name!r}; known: {sorted(CATALOG)}") from None
    p = dict(entry.defaults)
    unknown = set(params or {}) - set(p)
    if unknown:
        raise CatalogError(f"unknown parameters for {name}: {sorted(unknown)}")
    p.update(params or {})
    entry.validate(p)
    kind = Kind.FLAT if R_ambient == 0.0 else Kind.CONSTANT_CURVATURE
    bg = BackgroundSpacetime(entry.signature, kind, float(R_ambient))
    fn, r0, r1, c0, c1 = entry.build(p)
    n0, n1 = resolution
    facts = entry.facts(p) if kind is Kind.FLAT else {}
    if p.get("warp"):
        facts.pop("gamma", None)  # coordinate components no longer match
    return from_generator(
        fn, n0, n1, r0, r1, bg=bg, closed0=c0, closed1=c1,
        meta={"catalog": name, "params": p, "facts": facts, "R_ambient": float(R_ambient)},
    )


def parse_catalog_spec(spec: str) -> tuple[str, dict]:
    """``"cylinder:r=2,twist=0.3"`` -> ("cylinder", {"r": 2.0, "twist": 0.3})."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, _, val = item.partition("=")
        if not _:
            raise CatalogError(f"bad catalog parameter {item!r}; expected key=value")
        if "/" in val:
            lo, hi = val.split("/")
            params[key] = (float(lo), float(hi))
        elif val.lower() in ("true", "false"):
            params[key] = val.lower() == "true"
        else:
            params[key] = float(val)
    return name.strip(), params


# -- synthetic end data ----------------------------------------------------


def synthetic_boundary_data(
    couplings,
    ratio: float,
    n: int = 65,
    convention=None,
    k: float = 0.0,
    twist_rate: float = 0.0,
    duration: float = 1.0,
):
    """End strip whose projections satisfy the first and third boundary conditions.

    K_par has the predicted norm and K_par^2 / K_par^1 = ``ratio``; K_mix
    solves the third condition; the sheet is extremal at the end so
    K_perp = K_par.  With ``twist_rate`` c the normal gauge rotates along
    the end and K_par is transported so that D~ K_par = 0 analytically.
    Values are stored in the code frame (inverse of ``convention``).
    """
    from .boundary import AUDITED, BoundaryStrip, orientation, predicted_boundary_values
    from .stencils import trapezoid_weights

    c = convention or AUDITED
    if not math.isfinite(ratio):
        raise CatalogError("ratio K_par^2 / K_par^1 must be finite")
    if n < 5:
        raise CatalogError("synthetic strip needs at least 5 nodes")
    pred = predicted_boundary_values(couplings, c, k=k)
    h = duration / (n - 1)
    tau = np.linspace(0.0, duration, n)
    gamma = np.broadcast_to(np.diag([-1.0, 1.0]), (n, 2, 2)).copy()
    v = np.tile([1.0, 0.0], (n, 1))
    eta_in = np.tile([0.0, 1.0], (n, 1))
    zeros = np.zeros((n, 2))
    strip = BoundaryStrip(
        boundary="synthetic", nodes=[(i, 0) for i in range(n)], inward=1, v=v, eta=eta_in,
        gamma=gamma, dtau=trapezoid_weights(n, h, False), tau_rate=np.ones(n), h=h, periodic=False,
        K_par=zeros, K_mix=zeros, K_perp=zeros, k=np.zeros(n), R=np.zeros(n), Omega=np.zeros(n),
        twist=np.full(n, float(twist_rate)),
        meta={"synthetic": True, "ratio": ratio, "predicted": pred},
    )
    e_eff = c.s_eps * orientation(strip, c.s_eta * eta_in)
    direction = np.array([1.0, ratio]) / math.hypot(1.0, ratio)
    a, b, M = couplings.alpha, couplings.beta, couplings.M
    ap = a + 0.5 * M
    if pred["branch"] == "beta_zero":
        K_par0 = np.zeros(2)
        K_mix0 = math.sqrt(pred["K_mix_norm2"]) * direction
        K_par = np.tile(K_par0, (n, 1))
        K_mix = np.tile(K_mix0, (n, 1))
    else:
        K_par = np.tile(math.sqrt(pred["K_par_norm2"]) * direction, (n, 1))
        # eps K_mix = -(ap / (b e)) K_par  =>  K_mix = (ap / (b e)) (K^2, -K^1)
        K_mix = (ap / (b * e_eff))[:, None] * np.stack([K_par[:, 1], -K_par[:, 0]], axis=-1)
    if twist_rate:
        th = twist_rate * tau
        cth, sth = np.cos(th)[:, None], np.sin(th)[:, None]
        rot = lambda x: np.concatenate([cth * x[:, :1] + sth * x[:, 1:], -sth * x[:, :1] + cth * x[:, 1:]], -1)
        K_par, K_mix = rot(K_par), rot(K_mix)
    K_perp = K_par.copy()
    R = 2.0 * (np.sum(K_mix**2, -1) - np.sum(K_par * K_perp, -1))
    Omega = 2.0 * e_eff * (K_mix[:, 0] * (K_par + K_perp)[:, 1] - K_mix[:, 1] * (K_par + K_perp)[:, 0])
    # back to the code frame
    strip.K_par = c.s_K * K_par
    strip.K_mix = c.s_K * c.s_eta * K_mix
    strip.K_perp = c.s_K * K_perp
    strip.R = R
    strip.Omega = c.s_eps * Omega
    strip.k = np.full(n, c.s_eta * float(k))
    return strip
