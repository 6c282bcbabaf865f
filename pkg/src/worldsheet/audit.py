"""Sign audit of the boundary formulas on the twisted cylinder."""

from __future__ import annotations

import math

from .boundary import AuditRecord, Convention, Couplings, sign_audit
from .geometry import compute_geometry
from .solutions import instantiate
from .variation import (
    BumpSpec,
    DeformationField,
    analytic_boundary_variation_I1,
    analytic_boundary_variation_I2,
    analytic_tangential_variation,
    analytic_variation_I0,
    fd_variation,
)

AUDIT_SURFACE = ("cylinder", {"twist": 0.3})


def audit_deformations(grid) -> dict:
    """Interior normal bump, tangential end bump, normal bumps touching both ends."""
    top = 2.0 * math.pi
    return {
        "I0_bulk": DeformationField.from_bumps(grid, [BumpSpec((0.5, 3.0), (0.3, 1.5), (1.0, 0.5))]),
        "I0_boundary": DeformationField.from_bumps(
            grid, [BumpSpec((0.5, 0.1), (0.3, 0.8), (0.0, 0.0), (0.0, 1.0))]
        ),
        "ends": DeformationField.from_bumps(
            grid,
            [BumpSpec((0.5, 0.15), (0.3, 0.8), (1.0, 0.5)), BumpSpec((0.45, top - 0.2), (0.3, 0.7), (-0.3, 1.0))],
        ),
    }


def run_sign_audit(n: int = 129, rtol: float = 0.02) -> AuditRecord:
    """Search the 8 (eta, K, eps) sign assignments against finite differences.

    Also records whether the oracle supports the literal sign of the
    tangential boundary condition, using mu = alpha = 1 on the rotating rod
    (large boundary curvature).
    """
    f = compute_geometry(instantiate(AUDIT_SURFACE[0], AUDIT_SURFACE[1], (n, n)))
    d = audit_deformations(f.grid)
    oracle = {
        "I0_bulk": fd_variation("I0", f, d["I0_bulk"]),
        "I0_boundary": fd_variation("I0", f, d["I0_boundary"]),
        "I1_boundary": fd_variation("I1", f, d["ends"]),
        "I2_boundary": fd_variation("I2", f, d["ends"]),
    }

    def analytic(c: Convention) -> dict:
        return {
            "I0_bulk": analytic_variation_I0(f, d["I0_bulk"], c)["total"],
            "I0_boundary": analytic_variation_I0(f, d["I0_boundary"], c)["total"],
            "I1_boundary": analytic_boundary_variation_I1(f, d["ends"], c),
            "I2_boundary": analytic_boundary_variation_I2(f, d["ends"], c),
        }

    rec = sign_audit(oracle, analytic, rtol=rtol)
    rec.sigma_r1.update(tangential_oracle(n, rec.convention))
    rec.checks["oracle"] = oracle
    return rec


def tangential_oracle(n: int, c: Convention) -> dict:
    rod = compute_geometry(instantiate("rotating_rod", {"delta": 0.4}, (n, n)))
    lo, hi = rod.grid.range1
    dt = DeformationField.from_bumps(
        rod.grid, [BumpSpec((0.5, lo + 0.05 * (hi - lo)), (0.3, 0.2 * (hi - lo)), (0.0, 0.0), (0.0, 1.0))]
    )
    cp = Couplings(1.0, 1.0, 0.0)
    fd = fd_variation("S", rod, dt, couplings=cp)
    lit = analytic_tangential_variation(rod, dt, cp, c)
    mu_only = analytic_tangential_variation(rod, dt, Couplings(1.0, 0.0, 0.0), c)
    flipped = 2.0 * mu_only - lit  # curvature term with reversed sign
    return {
        "tangential_fd": fd,
        "tangential_literal": lit,
        "tangential_flipped": flipped,
        "oracle_supports_literal_b1": abs(lit - fd) < abs(flipped - fd),
    }
