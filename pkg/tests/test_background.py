from __future__ import annotations

import numpy as np
import pytest

from worldsheet.background import (
    BackgroundSpacetime,
    DomainError,
    Kind,
    Signature,
    christoffel_at,
    metric_at,
    riemann_at,
)

BG = BackgroundSpacetime(Signature.LORENTZIAN, Kind.CONSTANT_CURVATURE, 1.5)
X0 = np.array([0.3, -0.2, 0.5, 0.1])


def _fd_christoffel(bg, x, h):
    """Levi-Civita symbols from centered differences of the metric."""
    dg = np.empty((4, 4, 4))  # [rho, mu, nu] = d_rho g_mu nu
    for r in range(4):
        e = np.zeros(4)
        e[r] = h
        dg[r] = (metric_at(bg, x + e) - metric_at(bg, x - e)) / (2 * h)
    ginv = np.linalg.inv(metric_at(bg, x))
    low = 0.5 * (np.einsum("nrl->rnl", dg) + np.einsum("lrn->rnl", dg) - dg)  # [rho, nu, lam]
    return np.einsum("mr,rnl->mnl", ginv, low)


def test_flat_background_is_trivial():
    bg = BackgroundSpacetime()
    assert np.all(christoffel_at(bg, X0) == 0)
    assert np.all(riemann_at(bg, X0) == 0)
    np.testing.assert_array_equal(metric_at(bg, X0), np.diag([-1.0, 1, 1, 1]))


def test_christoffel_matches_metric_derivatives_at_second_order():
    exact = christoffel_at(BG, X0)
    errs = [np.max(np.abs(_fd_christoffel(BG, X0, h) - exact)) for h in (1e-2, 5e-3)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_riemann_from_christoffel_derivatives():
    h = 1e-4
    G = christoffel_at(BG, X0)
    dG = np.empty((4, 4, 4, 4))  # [a, mu, nu, lam]
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        dG[a] = (christoffel_at(BG, X0 + e) - christoffel_at(BG, X0 - e)) / (2 * h)
    # R^r_{s m n} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
    up = (np.einsum("mrns->rsmn", dG) - np.einsum("nrms->rsmn", dG)
          + np.einsum("rml,lns->rsmn", G, G) - np.einsum("rnl,lms->rsmn", G, G))
    low = np.einsum("pr,rsmn->psmn", metric_at(BG, X0), up)
    np.testing.assert_allclose(riemann_at(BG, X0), low, atol=1e-7)


def test_scalar_curvature_contracts_to_R_ambient():
    g = metric_at(BG, X0)
    gi = np.linalg.inv(g)
    R = np.einsum("ma,nb,mnab->", gi, gi, riemann_at(BG, X0))
    assert R == pytest.approx(1.5, rel=1e-12)


def test_domain_error_outside_chart():
    bg = BackgroundSpacetime(Signature.EUCLIDEAN, Kind.CONSTANT_CURVATURE, -12.0)
    with pytest.raises(DomainError):
        metric_at(bg, np.array([3.0, 0, 0, 0]))


def test_flat_with_curvature_rejected():
    with pytest.raises(ValueError):
        BackgroundSpacetime(Signature.LORENTZIAN, Kind.FLAT, 1.0)
