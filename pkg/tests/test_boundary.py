from __future__ import annotations

import math

import numpy as np
import pytest

from worldsheet import compute_geometry, instantiate, synthetic_boundary_data
from worldsheet.boundary import (
    AUDITED,
    ConsistencyError,
    Couplings,
    InvalidCouplings,
    MissingRiemannTable,
    NullEndError,
    RiemannBoundaryTable,
    bc_residuals,
    boundary_frame,
    classify_end,
    end_covariant_derivative,
    eps_apply,
    eps_pair,
    predicted_boundary_values,
    predicted_r1,
    residual_norms,
    sign_audit,
)


@pytest.fixture(scope="module")
def twisted():
    return compute_geometry(instantiate("cylinder", {"twist": 0.3}, (65, 65)))


@pytest.mark.parametrize("end", ["xi1_min", "xi1_max"])
def test_frame_is_orthonormal_and_inward(twisted, end):
    s = boundary_frame(twisted, end)
    assert s.completeness_residual() < 1e-12
    assert s.orthogonality_residual() < 1e-12
    vv = np.einsum("na,nab,nb->n", s.v, s.gamma, s.v)
    ee = np.einsum("na,nab,nb->n", s.eta, s.gamma, s.eta)
    np.testing.assert_allclose(vv, -1.0, atol=1e-12)
    np.testing.assert_allclose(ee, 1.0, atol=1e-12)
    # eta^1 points toward the interior of the xi^1 range
    assert np.all(np.sign(s.eta[:, 1]) == s.inward)


def test_helical_ends_are_geodesic(twisted):
    # on the flat induced metric the ends are straight lines
    for end in ("xi1_min", "xi1_max"):
        assert np.max(np.abs(boundary_frame(twisted, end).k)) < 1e-3


def test_flipping_eta_breaks_completeness_nowhere(twisted):
    s = boundary_frame(twisted, "xi1_min").flipped()
    assert s.completeness_residual() < 1e-12
    assert s.inward == -1


def test_rod_end_classification():
    exact = instantiate("rotating_rod", {"delta": 0.0}, (33, 33))
    c = classify_end(exact, "xi1_min")
    assert c["null"] and len(c["null_nodes"]) == 33
    with pytest.raises(NullEndError):
        boundary_frame(exact, "xi1_min")
    assert not classify_end(instantiate("rotating_rod", {"delta": 0.3}, (33, 33)), "xi1_max")["null"]


def test_end_derivative_annihilates_parallel_vectors():
    # a vector rotating against the end's normal-bundle twist is parallel
    s = synthetic_boundary_data(Couplings(1, 1, 1), 0.5, n=129, twist_rate=0.8)
    tau = np.concatenate([[0.0], np.cumsum(s.tau_rate[:-1] * s.h)])
    theta = np.cumsum(np.concatenate([[0.0], 0.5 * (s.twist[1:] + s.twist[:-1]) * np.diff(tau)]))
    f = np.stack([np.cos(theta), -np.sin(theta)], -1)
    assert np.max(np.abs(end_covariant_derivative(s, f))) < 1e-4
    assert np.max(np.abs(end_covariant_derivative(s, np.ones((s.n, 2))))) == pytest.approx(0.8)


def test_eps_helpers():
    x, y = np.array([[1.0, 2.0]]), np.array([[3.0, -1.0]])
    np.testing.assert_array_equal(eps_apply(x), [[2.0, -1.0]])
    assert eps_pair(x, y)[0] == -7.0


def test_predicted_values_for_unit_couplings():
    p = predicted_boundary_values(Couplings(1.0, 1.0, 1.0))
    assert (p["K_par_norm2"], p["R"], p["Omega"]) == pytest.approx((0.25, 0.0, 1.0))
    assert p["disagrees_with_literal_sign"]
    assert predicted_r1(Couplings(1.0, 1.0, 1.0), -1) == pytest.approx(0.0, abs=1e-15)
    assert predicted_r1(Couplings(1.0, 1.0, 1.0), +1) == pytest.approx(2.0)


def test_beta_zero_branch():
    p = predicted_boundary_values(Couplings(2.0, 0.5, 0.0))
    assert p["branch"] == "beta_zero" and p["K_par_norm2"] == 0.0
    assert p["R"] == pytest.approx(4.0) and p["K_mix_norm2"] == pytest.approx(2.0)


def test_massive_branch_reduces_to_massless():
    a = predicted_boundary_values(Couplings(1.0, 0.7, 0.4))
    b = predicted_boundary_values(Couplings(1.0, 0.7, 0.4, 1e-12))
    assert b["branch"] == "massive"
    assert b["K_par_norm2"] == pytest.approx(a["K_par_norm2"], rel=1e-9)


@pytest.mark.parametrize("alpha", [0.0, -0.5])
def test_inconsistent_couplings(alpha):
    with pytest.raises(ConsistencyError):
        predicted_boundary_values(Couplings(1.0, alpha, 0.3))


def test_coupling_validation():
    with pytest.raises(InvalidCouplings):
        Couplings(0.0, 1.0, 1.0)
    with pytest.raises(InvalidCouplings):
        Couplings(1.0, math.inf, 1.0)


def test_plane_violates_first_condition():
    s = boundary_frame(compute_geometry(instantiate("plane", {}, (17, 17))), "xi1_min")
    res = bc_residuals(s, Couplings(1.0, 1.0, 1.0))
    np.testing.assert_allclose(res["r1"], 1.0)
    assert np.max(np.abs(res["r3"])) == 0.0
    n = residual_norms(res, s.dtau)
    assert n["r1"]["linf"] == pytest.approx(1.0) and n["r1"]["l2"] == pytest.approx(1.0)


def test_zero_table_is_bit_identical():
    c = Couplings(1.0, 0.8, -0.6, 0.4)
    s = synthetic_boundary_data(c, 0.4, n=33, k=0.1, twist_rate=0.5)
    a = bc_residuals(s, c)
    b = bc_residuals(s, c, RiemannBoundaryTable.zeros(s.n), flat_background=False)
    for key in a:
        assert a[key].tobytes() == b[key].tobytes()
    with pytest.raises(MissingRiemannTable):
        bc_residuals(s, c, flat_background=False)


def test_audit_without_oracle_is_vacuous():
    rec = sign_audit()
    assert rec.unique and rec.convention == AUDITED
    assert rec.sigma_r1["literal_sign_consistent"] is False
