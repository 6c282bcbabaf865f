"""Sampled worldsheet embeddings on a rectangular parameter grid.

Axis 0 is xi^0 (timelike, tangent to the string ends), axis 1 is xi^1.  The
string ends are the two ``xi^1 = const`` edges.  A periodic axis stores its
first node again as the last node; field computations work on the *core*
array, which drops that duplicate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import stencils
from .background import BackgroundSpacetime, Signature
from .report import dumps

Generator = Callable[[np.ndarray, np.ndarray], np.ndarray]

MIN_NODES = 5


class GridError(ValueError):
    pass


class UnsupportedOperation(GridError):
    pass


class NoBoundaryError(GridError):
    pass


class BoundaryId(str, Enum):
    XI1_MIN = "xi1_min"
    XI1_MAX = "xi1_max"


@dataclass(frozen=True, eq=False)
class WorldsheetGrid:
    X: np.ndarray
    range0: tuple[float, float]
    range1: tuple[float, float]
    bg: BackgroundSpacetime = field(default_factory=BackgroundSpacetime)
    closed0: bool = False
    closed1: bool = False
    generator: Generator | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 3 or X.shape[2] != 4:
            raise GridError(f"X must have shape (n0, n1, 4), got {X.shape}")
        n0, n1 = X.shape[:2]
        if n0 < MIN_NODES or n1 < MIN_NODES:
            raise GridError(f"need at least {MIN_NODES} nodes per direction, got {n0}x{n1}")
        bad = np.argwhere(~np.isfinite(X))
        if bad.size:
            i, j, mu = bad[0]
            raise GridError(f"non-finite X^{mu} at node ({i}, {j})")
        for name, (a, b) in (("range0", self.range0), ("range1", self.range1)):
            if not (np.isfinite(a) and np.isfinite(b) and b > a):
                raise GridError(f"{name} must be an increasing finite interval, got {(a, b)}")
        if self.closed0:
            X[-1] = X[0]
        if self.closed1:
            X[:, -1] = X[:, 0]
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "range0", (float(self.range0[0]), float(self.range0[1])))
        object.__setattr__(self, "range1", (float(self.range1[0]), float(self.range1[1])))

    @property
    def n0(self) -> int:
        return self.X.shape[0]

    @property
    def n1(self) -> int:
        return self.X.shape[1]

    @property
    def h0(self) -> float:
        return (self.range0[1] - self.range0[0]) / (self.n0 - 1)

    @property
    def h1(self) -> float:
        return (self.range1[1] - self.range1[0]) / (self.n1 - 1)

    @property
    def h(self) -> tuple[float, float]:
        return self.h0, self.h1

    @property
    def periodic(self) -> tuple[bool, bool]:
        return self.closed0, self.closed1

    @property
    def signature(self) -> Signature:
        return self.bg.signature

    @property
    def xi0(self) -> np.ndarray:
        return np.linspace(*self.range0, self.n0)

    @property
    def xi1(self) -> np.ndarray:
        return np.linspace(*self.range1, self.n1)

    @property
    def core(self) -> np.ndarray:
        """X without the duplicated node of each periodic axis."""
        X = self.X
        if self.closed0:
            X = X[:-1]
        if self.closed1:
            X = X[:, :-1]
        return X

    def core_coords(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.xi0[:-1] if self.closed0 else self.xi0
        b = self.xi1[:-1] if self.closed1 else self.xi1
        return np.meshgrid(a, b, indexing="ij")

    def pad(self, f: np.ndarray) -> np.ndarray:
        """Re-attach duplicated periodic nodes to a core-shaped field."""
        if self.closed0:
            f = np.concatenate([f, f[:1]], axis=0)
        if self.closed1:
            f = np.concatenate([f, f[:, :1]], axis=1)
        return f

    def d(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Derivative of a core-shaped field along a grid axis."""
        return stencils.diff(f, axis, self.h[axis], self.periodic[axis])

    def with_X(self, X: np.ndarray) -> "WorldsheetGrid":
        """Same grid layout with new node positions (drops the generator)."""
        return replace(self, X=X, generator=None)

    def with_core(self, Xc: np.ndarray) -> "WorldsheetGrid":
        return self.with_X(self.pad(Xc))

    def weights(self) -> np.ndarray:
        """2D quadrature weights on the core grid."""
        nc0, nc1 = self.core.shape[:2]
        w0 = stencils.trapezoid_weights(nc0, self.h0, self.closed0)
        w1 = stencils.trapezoid_weights(nc1, self.h1, self.closed1)
        return np.outer(w0, w1)


def from_generator(
    fn: Generator,
    n0: int,
    n1: int,
    range0,
    range1,
    bg: BackgroundSpacetime | None = None,
    closed0: bool = False,
    closed1: bool = False,
    meta: dict | None = None,
) -> WorldsheetGrid:
    a = np.linspace(*range0, n0)
    b = np.linspace(*range1, n1)
    A, B = np.meshgrid(a, b, indexing="ij")
    X = np.asarray(fn(A, B), dtype=float)
    return WorldsheetGrid(
        X=X,
        range0=tuple(range0),
        range1=tuple(range1),
        bg=bg or BackgroundSpacetime(),
        closed0=closed0,
        closed1=closed1,
        generator=fn,
        meta=dict(meta or {}),
    )


def partial_derivatives(g: WorldsheetGrid, order: int = 1):
    """Core-shaped derivatives of X.

    order 1 -> e with shape (n0, n1, 2, 4), e[..., a, mu] = d_a X^mu.
    order 2 -> (e, dde) with dde[..., a, b, mu] = d_a d_b X^mu (symmetric).
    """
    Xc = g.core
    e = np.stack([g.d(Xc, 0), g.d(Xc, 1)], axis=-2)
    if order == 1:
        return e
    if order != 2:
        raise ValueError("order must be 1 or 2")
    d00 = g.d(e[..., 0, :], 0)
    d11 = g.d(e[..., 1, :], 1)
    d01 = g.d(e[..., 1, :], 0)
    dde = np.stack([np.stack([d00, d01], -2), np.stack([d01, d11], -2)], -3)
    return e, dde


def refine(g: WorldsheetGrid) -> WorldsheetGrid:
    if g.generator is None:
        raise UnsupportedOperation("refinement needs an analytic generator; raw grids cannot be refined")
    return from_generator(
        g.generator,
        2 * g.n0 - 1,
        2 * g.n1 - 1,
        g.range0,
        g.range1,
        bg=g.bg,
        closed0=g.closed0,
        closed1=g.closed1,
        meta=g.meta,
    )


def boundary_nodes(g: WorldsheetGrid, b: BoundaryId | str):
    """Nodes of a string end ordered by increasing xi^0, and the inward sign."""
    b = BoundaryId(b)
    if g.closed1:
        raise NoBoundaryError("grid is periodic in xi^1; it has no string ends")
    j, inward = (0, 1) if b is BoundaryId.XI1_MIN else (g.n1 - 1, -1)
    nodes = [(i, j) for i in range(g.core.shape[0])]
    return nodes, inward


# -- embedding documents ---------------------------------------------------


def to_document(g: WorldsheetGrid) -> dict:
    return {
        "signature": g.signature.value,
        "background": g.bg.to_dict(),
        "grid": {
            "n0": g.n0,
            "n1": g.n1,
            "range0": list(g.range0),
            "range1": list(g.range1),
            "closed0": g.closed0,
            "closed1": g.closed1,
        },
        "X": g.X.tolist(),
    }


def save_embedding(g: WorldsheetGrid, path) -> None:
    Path(path).write_text(dumps(to_document(g)))


def load_embedding(source) -> WorldsheetGrid:
    """Load an embedding document from a path, JSON string or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GridError(f"malformed embedding document: {exc}") from exc
    try:
        grid = doc["grid"]
        bgd = doc.get("background", {})
        bg = BackgroundSpacetime(
            signature=doc["signature"],
            kind=bgd.get("kind", "flat"),
            R_ambient=float(bgd.get("R_ambient", 0.0)),
        )
        X = np.array(doc["X"], dtype=float)
        n0, n1 = int(grid["n0"]), int(grid["n1"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GridError(f"malformed embedding document: {exc!r}") from exc
    if X.shape != (n0, n1, 4):
        raise GridError(f"X has shape {X.shape}, expected {(n0, n1, 4)}")
    if grid.get("closed0") and not np.array_equal(X[0], X[-1]):
        raise GridError("closed0 grid must repeat its first row as the last row")
    if grid.get("closed1") and not np.array_equal(X[:, 0], X[:, -1]):
        raise GridError("closed1 grid must repeat its first column as the last column")
    return WorldsheetGrid(
        X=X,
        range0=tuple(grid["range0"]),
        range1=tuple(grid["range1"]),
        bg=bg,
        closed0=bool(grid.get("closed0", False)),
        closed1=bool(grid.get("closed1", False)),
    )
