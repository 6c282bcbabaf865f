"""Refinement studies: max-norm errors under repeated grid halving."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GeometryFields,
    compute_geometry,
    flat_form_twist,
    gauss_form,
    integrability_residuals,
)
from .grid import WorldsheetGrid, refine

RATIO_BAND = (3.5, 4.5)
# residuals below this are identities satisfied to round-off; no rate is defined
EXACT = 1e-8


def measured_errors(f: GeometryFields) -> dict[str, float]:
    """Max-norm residuals and, where the catalog knows them, errors against facts."""
    g = f.grid
    out = {k: float(np.max(np.abs(v))) for k, v in integrability_residuals(f).items()}
    if g.bg.flat:
        out["gauss_form"] = float(np.max(np.abs(f.R - gauss_form(g.bg, f.K, f.Kmean, f.gamma_inv))))
    out["twist_flat_form"] = float(np.max(np.abs(f.Omega_tilde - flat_form_twist(g.bg, f.K, f.gamma_inv))))
    facts = g.meta.get("facts", {}) if g.meta else {}
    if isinstance(facts.get("gamma"), list):
        out["gamma_fact"] = float(np.max(np.abs(f.gamma - np.array(facts["gamma"]))))
    if "mean_curvature_norm" in facts:
        out["mean_curvature_fact"] = float(
            np.max(np.abs(np.linalg.norm(f.Kmean, axis=-1) - facts["mean_curvature_norm"]))
        )
    if facts.get("extremal"):
        out["mean_curvature_fact"] = float(np.max(np.linalg.norm(f.Kmean, axis=-1)))
    return out


@dataclass
class Study:
    resolutions: list
    errors: dict = field(default_factory=dict)  # name -> [err per level]
    ratios: dict = field(default_factory=dict)
    status: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[str]:
        return [k for k, s in self.status.items() if s == "fail"]

    def to_dict(self) -> dict:
        return {
            "resolutions": self.resolutions,
            "errors": self.errors,
            "ratios": self.ratios,
            "status": self.status,
            "band": list(RATIO_BAND),
        }


def classify(errs: list[float], band=RATIO_BAND, exact: float = EXACT) -> tuple[list, str]:
    """Judge a refinement sequence by its finest ratio.

    exact            finest error below ``exact`` (identity holds to round-off)
    second_order     finest ratio inside ``band``
    superconvergent  finest ratio above the band: the h^2 coefficient vanishes
    fail             anything else
    """
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(errs[:-1], errs[1:])]
    if errs[-1] < exact:
        return ratios, "exact"
    r = ratios[-1]
    if band[0] <= r <= band[1]:
        return ratios, "second_order"
    if r > band[1]:
        return ratios, "superconvergent"
    return ratios, "fail"


def study(grid: WorldsheetGrid, levels: int = 3, exact: float = EXACT, band=RATIO_BAND) -> Study:
    grids = [grid]
    for _ in range(levels - 1):
        grids.append(refine(grids[-1]))
    per_level = [measured_errors(compute_geometry(g)) for g in grids]
    st = Study([[g.n0, g.n1] for g in grids])
    for key in per_level[0]:
        errs = [lvl[key] for lvl in per_level]
        ratios, status = classify(errs, band, exact)
        st.errors[key], st.ratios[key], st.status[key] = errs, ratios, status
    return st
