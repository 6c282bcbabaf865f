"""Ambient four-dimensional backgrounds.

Flat space and constant-curvature space, the latter realized in the
conformally flat chart

    g = Omega(x)**2 * eta,   Omega(x) = 1 / (1 + kappa/4 * eta(x, x)),

with sectional curvature ``kappa = R_ambient / 12``.  All functions accept a
single point of shape ``(4,)`` or a stack of points ``(..., 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DomainError(ValueError):
    """Point lies outside the chart (conformal factor not finite/positive)."""


class Signature(str, Enum):
    LORENTZIAN = "lorentzian"
    EUCLIDEAN = "euclidean"


class Kind(str, Enum):
    FLAT = "flat"
    CONSTANT_CURVATURE = "constant_curvature"


@dataclass(frozen=True)
class BackgroundSpacetime:
    signature: Signature = Signature.LORENTZIAN
    kind: Kind = Kind.FLAT
    R_ambient: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "signature", Signature(self.signature))
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.FLAT and self.R_ambient != 0.0:
            raise ValueError("flat background must have R_ambient = 0")
        if not np.isfinite(self.R_ambient):
            raise ValueError("R_ambient must be finite")

    @property
    def flat(self) -> bool:
        return self.kind is Kind.FLAT

    @property
    def kappa(self) -> float:
        """Sectional curvature."""
        return self.R_ambient / 12.0

    @property
    def eta(self) -> np.ndarray:
        return flat_metric(self.signature)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "R_ambient": float(self.R_ambient)}


def flat_metric(signature: Signature | str) -> np.ndarray:
    if Signature(signature) is Signature.LORENTZIAN:
        return np.diag([-1.0, 1.0, 1.0, 1.0])
    return np.eye(4)


def _conformal(bg: BackgroundSpacetime, x: np.ndarray):
    """Return (Omega, dsigma_lower) with sigma = log Omega."""
    x = np.asarray(x, dtype=float)
    eta = bg.eta
    x_low = x @ eta
    q = np.einsum("...m,...m->...", x, x_low)
    denom = 1.0 + 0.25 * bg.kappa * q
    if not np.all(np.isfinite(denom)) or np.any(denom <= 0.0):
        bad = np.argwhere(~(np.isfinite(denom) & (denom > 0.0)))
        raise DomainError(f"conformal factor not positive at {bad[:5].tolist()}")
    omega = 1.0 / denom
    dsigma = -0.5 * bg.kappa * x_low / denom[..., None]
    return omega, dsigma


def metric_at(bg: BackgroundSpacetime, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if bg.flat:
        return np.broadcast_to(bg.eta, x.shape[:-1] + (4, 4)).copy()
    omega, _ = _conformal(bg, x)
    return (omega**2)[..., None, None] * bg.eta


def christoffel_at(bg: BackgroundSpacetime, x) -> np.ndarray:
    """Gamma^mu_{nu lam}, index order [..., mu, nu, lam]."""
    x = np.asarray(x, dtype=float)
    if bg.flat:
        return np.zeros(x.shape[:-1] + (4, 4, 4))
    _, ds = _conformal(bg, x)
    eta = bg.eta
    eye = np.eye(4)
    # ds_upper^mu = eta^{mu rho} ds_rho; eta is its own inverse
    ds_up = ds @ eta
    return (
        np.einsum("mn,...l->...mnl", eye, ds)
        + np.einsum("ml,...n->...mnl", eye, ds)
        - np.einsum("nl,...m->...mnl", eta, ds_up)
    )


def riemann_at(bg: BackgroundSpacetime, x) -> np.ndarray:
    """R_{mu nu alpha beta}, all indices down."""
    x = np.asarray(x, dtype=float)
    if bg.flat:
        return np.zeros(x.shape[:-1] + (4, 4, 4, 4))
    g = metric_at(bg, x)
    return bg.kappa * (
        np.einsum("...ma,...nb->...mnab", g, g) - np.einsum("...mb,...na->...mnab", g, g)
    )
