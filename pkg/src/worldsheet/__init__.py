"""Intrinsic, extrinsic and topological geometry of sampled string worldsheets."""

__version__ = "0.1.0"

from .background import BackgroundSpacetime, Kind, Signature
from .boundary import (
    AUDITED,
    Convention,
    Couplings,
    bc_residuals,
    boundary_frame,
    predicted_boundary_values,
    sign_audit,
)
from .convergence import study
from .geometry import GeometryFields, compute_geometry, integrability_residuals
from .grid import BoundaryId, WorldsheetGrid, load_embedding, save_embedding
from .invariants import action_values, chern_integral, euler_characteristic
from .kernels import BACKEND
from .solutions import instantiate, synthetic_boundary_data
from .variation import BumpSpec, DeformationField, fd_variation, variation_table

__all__ = [
    "AUDITED",
    "BACKEND",
    "BackgroundSpacetime",
    "BoundaryId",
    "BumpSpec",
    "Convention",
    "Couplings",
    "DeformationField",
    "GeometryFields",
    "Kind",
    "Signature",
    "WorldsheetGrid",
    "action_values",
    "bc_residuals",
    "boundary_frame",
    "chern_integral",
    "compute_geometry",
    "euler_characteristic",
    "fd_variation",
    "instantiate",
    "integrability_residuals",
    "load_embedding",
    "predicted_boundary_values",
    "save_embedding",
    "sign_audit",
    "study",
    "synthetic_boundary_data",
    "variation_table",
]
