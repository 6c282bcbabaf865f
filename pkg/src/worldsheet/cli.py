"""Command-line front end: generate, analyze, verify, vary, bc.

Exit status: 0 when every requested check passes, 1 when a check fails,
2 for invalid input or configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    AUDITED,
    BoundaryError,
    Couplings,
    NullEndError,
    RiemannBoundaryTable,
    bc_residuals,
    boundary_curvatures,
    boundary_frame,
    classify_end,
    formula_frame,
    predicted_boundary_values,
    residual_norms,
)
from .convergence import EXACT, study
from .geometry import GeometryError, compute_geometry
from .grid import BoundaryId, GridError, load_embedding, save_embedding, to_document
from .invariants import InvariantError, action_values, chern_integral, euler_characteristic
from .kernels import BACKEND
from .report import dumps
from .background import Signature
from .solutions import CatalogError, instantiate, parse_catalog_spec, synthetic_boundary_data
from .variation import BumpSpec, DeformationField, VariationError, variation_table

COMMANDS = ("generate", "analyze", "verify", "vary", "bc")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    input: str | None = None
    catalog: str | None = None
    resolution: tuple[int, int] = (33, 33)
    R_ambient: float = 0.0
    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    mass: float = 0.0
    deform: list = field(default_factory=list)
    tol_scale: float = 1.0
    format: str = "json"
    deterministic: bool = False
    out: str | None = None
    levels: int = 3
    fields: bool = False
    synthetic: float | None = None
    audit: bool = False

    def validate(self, command: str) -> None:
        sources = [s for s in (self.input, self.catalog) if s]
        if command == "bc" and self.synthetic is not None:
            if sources:
                raise ConfigError("--synthetic replaces --input/--catalog")
        elif len(sources) != 1:
            raise ConfigError("exactly one of --input or --catalog is required")
        if not self.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
        if self.format not in ("json", "text"):
            raise ConfigError("--format must be json or text")

    @property
    def couplings(self) -> Couplings:
        return Couplings(self.mu, self.alpha, self.beta, self.mass)


def parse_resolution(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad resolution {text!r}; expected n0xn1") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 5:
        raise ConfigError(f"bad resolution {text!r}; need two sizes of at least 5")
    return vals


def load_grid(cfg: RunConfig):
    if cfg.input:
        return load_embedding(cfg.input)
    name, params = parse_catalog_spec(cfg.catalog)
    return instantiate(name, params, cfg.resolution, R_ambient=cfg.R_ambient)


# -- commands ----------------------------------------------------------------


def cmd_generate(cfg: RunConfig) -> dict:
    g = load_grid(cfg)
    if cfg.out:
        save_embedding(g, cfg.out)
        return {"written": cfg.out, "shape": [g.n0, g.n1], "failures": []}
    return {"document": to_document(g), "failures": []}


def _field_dump(f) -> dict:
    return {
        "gamma": f.gamma,
        "K": f.K,
        "K_mean": f.Kmean,
        "omega": f.omega,
        "R": f.R,
        "Omega_tilde": f.Omega_tilde,
        "normals": f.normals,
    }


def _end_summary(f) -> dict:
    out = {}
    if f.grid.closed1:
        return out
    for b in BoundaryId:
        try:
            s = boundary_frame(f, b)
        except NullEndError as exc:
            out[b.value] = {"classification": "null", "null_nodes": len(exc.nodes)}
            continue
        except BoundaryError as exc:
            out[b.value] = {"classification": "invalid", "message": str(exc)}
            continue
        out[b.value] = {"classification": "timelike" if f.grid.signature is Signature.LORENTZIAN else "euclidean",
                        "strip": s}
    return out


def cmd_analyze(cfg: RunConfig) -> dict:
    g = load_grid(cfg)
    f = compute_geometry(g)
    tol = 0.01 * cfg.tol_scale
    inv = {"action": action_values(f, cfg.mu, cfg.alpha, cfg.beta).to_dict(), "chern": chern_integral(f)}
    failures = []
    ends = _end_summary(f)
    if g.signature is Signature.EUCLIDEAN:
        chi = euler_characteristic(f)
        inv["euler_characteristic"] = chi.to_dict()
        if abs(chi.value - round(chi.value)) > tol:
            failures.append(f"euler characteristic {chi.value:.6g} is not an integer within {tol:g}")
    else:
        ks = [(e["strip"].k, e["strip"].dtau) for e in ends.values() if "strip" in e]
        inv["euler_characteristic"] = euler_characteristic(f, boundary_k=ks).to_dict()
    if g.closed0 and g.closed1:
        raw = inv["chern"]["raw"]
        if abs(raw - 2 * math.pi * round(raw / (2 * math.pi))) > tol:
            failures.append(f"Chern integral {raw:.6g} is not a multiple of 2 pi within {tol:g}")
    report = {
        "grid": {"n0": g.n0, "n1": g.n1, "closed0": g.closed0, "closed1": g.closed1,
                 "signature": g.signature.value, "background": g.bg.to_dict()},
        "invariants": inv,
        "ends": {k: {kk: vv for kk, vv in v.items() if kk != "strip"} for k, v in ends.items()},
        "summary": {
            "max_abs_K_mean": float(np.max(np.abs(f.Kmean))),
            "max_abs_R": float(np.max(np.abs(f.R))),
            "max_abs_Omega_tilde": float(np.max(np.abs(f.Omega_tilde))),
        },
        "failures": failures,
    }
    if cfg.fields:
        report["fields"] = _field_dump(f)
    return report


def cmd_verify(cfg: RunConfig) -> dict:
    g = load_grid(cfg)
    st = study(g, levels=cfg.levels, exact=EXACT * cfg.tol_scale)
    failures = [f"{k}: finest refinement ratio {st.ratios[k][-1]:.4g} outside [3.5, 4.5]" for k in st.failures]
    return {"convergence": st.to_dict(), "failures": failures}


def cmd_vary(cfg: RunConfig) -> dict:
    g = load_grid(cfg)
    f = compute_geometry(g)
    if not cfg.deform:
        raise ConfigError("vary needs at least one --deform spec")
    d = DeformationField.from_bumps(g, [BumpSpec.parse(s) for s in cfg.deform])
    table = variation_table(f, d, cfg.couplings)
    fd, an = table["fd"], table["analytic"]
    failures = []
    h2 = max(g.h0, g.h1) ** 2
    ts = cfg.tol_scale
    if table["interior"]:
        for name in ("I1", "I2"):
            bound = max(1e-6, 10.0 * h2) * ts
            if abs(fd[name]) > bound:
                failures.append(f"{name} varies under an interior deformation: {fd[name]:.3g} > {bound:.3g}")
    checks = {"I0": 0.01, "I1": 0.02, "I2": 0.02}
    scale = max(abs(v) for v in fd.values() if v is not None) or 1.0
    for name, rtol in checks.items():
        if table["interior"] and name != "I0":
            continue
        diff = abs(fd[name] - an[name])
        if diff > rtol * ts * max(abs(fd[name]), 1e-3 * scale, 1e-9):
            failures.append(f"{name}: analytic {an[name]:.6g} vs finite difference {fd[name]:.6g}")
    return {"variation": table, "couplings": cfg.couplings.to_dict(), "failures": failures}


def cmd_bc(cfg: RunConfig) -> dict:
    c = cfg.couplings
    tol = 1e-8 * cfg.tol_scale
    report = {"couplings": c.to_dict(), "convention": AUDITED.to_dict(), "ends": {}, "findings": []}
    try:
        report["predicted"] = predicted_boundary_values(c)
    except BoundaryError as exc:
        report["predicted"] = {"error": str(exc)}
    if cfg.audit:
        from .audit import run_sign_audit

        report["audit"] = run_sign_audit().to_dict()
    if cfg.synthetic is not None:
        strips = {"synthetic": synthetic_boundary_data(c, cfg.synthetic, cfg.resolution[0])}
        tables = {"synthetic": None}
    else:
        g = load_grid(cfg)
        strips, tables = {}, {}
        if g.closed1:
            report["findings"].append("sheet is periodic in xi^1; it has no ends")
        else:
            f = None
            for b in BoundaryId:
                cls = classify_end(g, b)
                if cls["null_nodes"]:
                    report["ends"][b.value] = {"classification": "null", "null_nodes": cls["null_nodes"]}
                    report["findings"].append(f"end {b.value} is null (moves at the speed of light)")
                    continue
                f = f or compute_geometry(g)
                strips[b.value] = boundary_frame(f, b)
                tables[b.value] = None if g.bg.flat else RiemannBoundaryTable.zeros(strips[b.value].n)
    failures = []
    for name, s in strips.items():
        res = bc_residuals(s, c, tables[name])
        norms = residual_norms(res, s.dtau)
        ff = formula_frame(s)
        entry = {
            "classification": "timelike",
            "completeness": s.completeness_residual(),
            "orthogonality": s.orthogonality_residual(),
            "K_par": ff.K_par, "K_mix": ff.K_mix, "K_perp": ff.K_perp, "k": ff.k,
            "R": ff.R, "Omega": ff.Omega,
            "assembled": boundary_curvatures(ff),
            "residuals": res,
            "norms": norms,
        }
        report["ends"][name] = entry
        for key, label in (("r1", "BC1"), ("r2", "BC2"), ("r3", "BC3")):
            if norms[key]["linf"] > tol:
                failures.append(f"{label} violated at end {name}: max |{key}| = {norms[key]['linf']:.6g}")
    report["failures"] = failures
    return report


HANDLERS = {"generate": cmd_generate, "analyze": cmd_analyze, "verify": cmd_verify, "vary": cmd_vary, "bc": cmd_bc}


def execute(command: str, cfg: RunConfig) -> tuple[int, dict]:
    """Run a command; returns (exit status, report)."""
    t0 = time.perf_counter()
    try:
        cfg.validate(command)
        report = HANDLERS[command](cfg)
    except (ConfigError, CatalogError, GridError, GeometryError, BoundaryError, VariationError,
            InvariantError, OSError, json.JSONDecodeError) as exc:
        return 2, {"command": command, "error": type(exc).__name__, "message": str(exc),
                   "failures": [str(exc)]}
    report["command"] = command
    report["passed"] = not report["failures"]
    if not cfg.deterministic:
        report["meta"] = {"elapsed_s": time.perf_counter() - t0, "backend": BACKEND, "version": __version__}
    return (0 if report["passed"] else 1), report


# -- text output -------------------------------------------------------------


def _text(report: dict, prefix: str = "") -> list[str]:
    lines = []
    for key in sorted(report):
        val = report[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            lines.extend(_text(val, name + "."))
        elif isinstance(val, np.ndarray) and val.size > 8:
            lines.append(f"{name}: array{list(val.shape)} max|.|={np.max(np.abs(val)):.6g}")
        elif isinstance(val, list) and len(val) > 8:
            lines.append(f"{name}: [{len(val)} items]")
        else:
            lines.append(f"{name}: {val}")
    return lines


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_text(json.loads(dumps(report)))) + "\n"
    return dumps(report, indent=1) + "\n"


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--input", help="embedding document (JSON)")
    src.add_argument("--catalog", help="catalog spec, e.g. 'cylinder:r=2,twist=0.3'")
    src.add_argument("--resolution", type=parse_resolution, default=None, help="n0xn1 (default 33x33)")
    src.add_argument("--R-ambient", dest="R_ambient", type=float, default=None,
                     help="constant-curvature background for catalog entries")
    src.add_argument("--config", help="JSON run configuration; command-line flags override it")
    cp = common.add_argument_group("couplings")
    cp.add_argument("--mu", type=float, default=None)
    cp.add_argument("--alpha", type=float, default=None)
    cp.add_argument("--beta", type=float, default=None)
    cp.add_argument("--mass", type=float, default=None)
    out = common.add_argument_group("output")
    out.add_argument("--deform", action="append", default=None, help="bump 'c0,c1;w0,w1;n1,n2;t0,t1' (repeatable)")
    out.add_argument("--tol-scale", dest="tol_scale", type=float, default=None)
    out.add_argument("--format", choices=("json", "text"), default=None)
    out.add_argument("--deterministic", action="store_true", default=None,
                     help="omit timing and version metadata so reports are byte-identical")
    out.add_argument("--out", default=None)

    p = argparse.ArgumentParser(prog="worldsheet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="catalog entry -> embedding document")
    a = sub.add_parser("analyze", parents=[common], help="geometry fields and invariants")
    a.add_argument("--fields", action="store_true", default=None, help="include per-node field arrays")
    v = sub.add_parser("verify", parents=[common], help="integrability residuals under refinement")
    v.add_argument("--levels", type=int, default=None)
    sub.add_parser("vary", parents=[common], help="finite-difference vs analytic variations")
    b = sub.add_parser("bc", parents=[common], help="end frames, boundary conditions, predicted values")
    b.add_argument("--synthetic", type=float, default=None, metavar="RATIO",
                   help="evaluate on synthetic end data with K_par^2/K_par^1 = RATIO")
    b.add_argument("--audit", action="store_true", default=None, help="run the finite-difference sign audit")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {}
    if ns.config:
        try:
            base = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        bg = base.pop("background", None)
        if bg:
            base.setdefault("R_ambient", float(bg.get("R_ambient", 0.0)))
        if "resolution" in base and isinstance(base["resolution"], str):
            base["resolution"] = parse_resolution(base["resolution"])
    cfg = RunConfig()
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(base) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k, v in base.items():
        setattr(cfg, k, tuple(v) if k == "resolution" else v)
    for k in known:
        val = getattr(ns, k, None)
        if val is not None:
            setattr(cfg, k, val)
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        status, report = 2, {"command": ns.command, "error": "ConfigError", "message": str(exc),
                             "failures": [str(exc)]}
        cfg = RunConfig()
    else:
        status, report = execute(ns.command, cfg)
    text = render(report, cfg.format)
    if cfg.out and ns.command != "generate":
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if status:
        for msg in report.get("failures", []):
            print(f"worldsheet {ns.command}: {msg}", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
