from __future__ import annotations

import math

import numpy as np
import pytest

from worldsheet import instantiate
from worldsheet.solutions import CATALOG, CatalogError, parse_catalog_spec


def test_parse_catalog_spec():
    name, p = parse_catalog_spec("cylinder:r=2,twist=0.3,range1=0/3.1,closed=false")
    assert name == "cylinder"
    assert p == {"r": 2.0, "twist": 0.3, "range1": (0.0, 3.1), "closed": False}
    with pytest.raises(CatalogError):
        parse_catalog_spec("plane:oops")


@pytest.mark.parametrize(
    "name, params",
    [
        ("nope", {}),
        ("cylinder", {"radius": 1}),
        ("cylinder", {"twist": 0.6}),
        ("cylinder", {"warp": 1.0}),
        ("rotating_rod", {"delta": 2.0}),
        ("sphere_cap", {"theta_range": (0.0, 1.0)}),
        ("torus", {"r": 3.0}),
        ("disk", {"phi_range": (0.0, 7.0)}),
    ],
)
def test_invalid_parameters(name, params):
    with pytest.raises(CatalogError):
        instantiate(name, params)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_entry_samples(name):
    g = instantiate(name, {}, (9, 9))
    assert g.X.shape == (9, 9, 4) and np.all(np.isfinite(g.X))


def test_warp_keeps_the_surface():
    base = instantiate("cylinder", {"r": 1.5}, (17, 17))
    warped = instantiate("cylinder", {"r": 1.5, "warp": 0.4}, (17, 17))
    radius = np.hypot(warped.X[..., 1], warped.X[..., 2])
    np.testing.assert_allclose(radius, 1.5)
    # corners stay put and the xi^1 = 0 edge maps onto itself
    for c in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
        np.testing.assert_allclose(warped.X[c], base.X[c], atol=1e-14)
    np.testing.assert_allclose(warped.X[:, 0, 2], 0.0, atol=1e-14)
    assert "gamma" not in warped.meta["facts"]


def test_sphere_cap_is_on_the_sphere():
    g = instantiate("sphere_cap", {"r": 2.0, "warp": 0.2}, (9, 9))
    np.testing.assert_allclose(np.linalg.norm(g.X[..., :3], axis=-1), 2.0)


def test_rod_ends_move_at_light_speed_when_delta_zero():
    g = instantiate("rotating_rod", {"delta": 0.0}, (9, 9))
    v = np.gradient(g.X[:, 0, 1:3], g.h0, axis=0)
    speed = np.linalg.norm(v, axis=-1)
    np.testing.assert_allclose(speed[1:-1], 1.0, rtol=1e-2)


def test_curved_background_drops_flat_facts():
    g = instantiate("cylinder", {"r": 1.0, "twist": 0.3}, (9, 9), R_ambient=2.0)
    assert g.meta["facts"] == {} and not g.bg.flat
    assert math.isclose(g.bg.kappa, 2.0 / 12.0)
