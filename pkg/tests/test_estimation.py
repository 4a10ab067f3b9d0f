import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocrb.errors import IncompatibleSupport, IndexOutOfRange, NumericalInconsistency
from geocrb.estimation import (
    GAMMA_CLAMP,
    attainable_qcrb,
    attainable_qcrb_matrix,
    bounds_at,
    gamma_spectrum,
    holevo_sandwich,
    inestimable_axes,
    qfim,
    qfim_from_sld,
    sld_crb_scalar,
    sld_pure,
    sld_residual,
    subspace,
    uhlmann_from_sld,
    uncertainty_check,
    uncertainty_slack,
    weight_matrix,
)
from geocrb.geometry import qgt, split
from geocrb.models import qubit_model, qutrit_model, ququart_model, random_unitary_model, tangents

QUARTER = (math.pi / 4, 0.0, 0.0)


def test_qfim_is_four_g():
    np.testing.assert_allclose(qfim([[0.25, 0.1], [0.1, 0.5]]), [[1.0, 0.4], [0.4, 2.0]])


def test_attainable_formula():
    assert attainable_qcrb([0.0, 0.0]) == pytest.approx(2.0)
    assert attainable_qcrb([1.0, -1.0]) == pytest.approx(4.0)
    assert attainable_qcrb([1.0, -1.0, 0.0]) == pytest.approx(5.0)


def test_qutrit_full_model_bounds():
    rep = bounds_at(qutrit_model(), QUARTER)
    np.testing.assert_allclose(np.sort(rep.spectrum.eigenvalues), [-1, 0, 1], atol=1e-9)
    assert rep.gamma == pytest.approx(1.0, abs=1e-9)
    assert rep.sld_crb == pytest.approx(3.0, abs=1e-9)
    assert rep.sandwich_mid == pytest.approx(4.0, abs=1e-9)
    assert rep.sandwich_gamma == pytest.approx(6.0, abs=1e-9)
    assert rep.sandwich_two == pytest.approx(6.0, abs=1e-9)
    assert rep.attainable_qcrb == pytest.approx(5.0, abs=1e-6)
    assert rep.inestimable == []


def test_qutrit_subspaces_at_quarter_pi():
    ab = bounds_at(qutrit_model(), QUARTER, axes=(0, 1))
    assert ab.gamma == pytest.approx(math.sqrt(2 / 3), abs=1e-9)
    assert ab.attainable_qcrb == pytest.approx(6 - 2 * math.sqrt(3), abs=1e-9)
    ap = bounds_at(qutrit_model(), QUARTER, axes=(0, 2))
    assert ap.attainable_qcrb == pytest.approx(ab.attainable_qcrb, abs=1e-9)
    bp = bounds_at(qutrit_model(), QUARTER, axes=(1, 2))
    assert bp.gamma == pytest.approx(0.0, abs=1e-12)
    assert bp.attainable_qcrb == pytest.approx(2.0, abs=1e-12)
    assert bp.sld_crb == pytest.approx(2.0, abs=1e-9)


def test_qubit_equator_bounds_and_identity_weight():
    rep = bounds_at(qubit_model(), (math.pi / 2, 0.0))
    assert (rep.sld_crb, rep.sandwich_mid, rep.sandwich_gamma, rep.attainable_qcrb) == pytest.approx(
        (2.0, 3.0, 4.0, 4.0), abs=1e-9
    )
    ident = bounds_at(qubit_model(), (math.pi / 2, 0.0), w="identity")
    assert ident.sld_crb == pytest.approx(2.0, abs=1e-9)


def test_singular_qfim_at_pole():
    rep = bounds_at(qutrit_model(), (0.0, 0.0, 0.0))
    assert rep.spectrum.rank == 2
    assert rep.inestimable == [2]
    assert rep.sld_crb == pytest.approx(2.0, abs=1e-9)
    # the null direction contributes a gamma = 0 eigenvalue, i.e. 1 each
    assert rep.attainable_qcrb == pytest.approx(3.0, abs=1e-9)
    assert rep.gamma < 1e-9


def test_incompatible_support():
    with pytest.raises(IncompatibleSupport):
        gamma_spectrum(np.diag([1.0, 0.0]), np.array([[0, 0.3], [-0.3, 0]]))
    with pytest.raises(IncompatibleSupport):
        sld_crb_scalar(np.diag([1.0, 0.0]), "identity")


def test_gamma_above_one_is_rejected():
    with pytest.raises(NumericalInconsistency):
        gamma_spectrum(np.eye(2), np.array([[0, 1.0], [-1.0, 0]]))


def test_gamma_tiny_excess_is_clamped():
    f = 0.5 * (1 + 0.5 * GAMMA_CLAMP) * np.array([[0, 1.0], [-1.0, 0]])
    spec = gamma_spectrum(np.eye(2), f)
    assert spec.gamma == 1.0
    assert spec.gamma_raw > 1.0


def test_weight_matrix_kinds():
    j = np.diag([2.0, 1.0])
    np.testing.assert_allclose(weight_matrix("qfim", j), j)
    np.testing.assert_allclose(weight_matrix("identity", j), np.eye(2))
    with pytest.raises(ValueError):
        weight_matrix("trace", j)
    with pytest.raises(ValueError):
        weight_matrix(np.diag([1.0, -1.0]), j)
    with pytest.raises(ValueError):
        weight_matrix(np.eye(3), j)


def test_subspace_validation():
    j, f = np.eye(3), np.zeros((3, 3))
    with pytest.raises(IndexOutOfRange):
        subspace(j, f, (0, 3))
    with pytest.raises(IndexOutOfRange):
        subspace(j, f, (1, 1))


def test_inestimable_axes_detects_rotated_null_direction():
    v = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    j = np.eye(3) - np.outer(v, v)
    assert inestimable_axes(j) == []
    assert inestimable_axes(np.diag([1.0, 0.0, 2.0])) == [1]


def test_ordering_violation_is_reported(monkeypatch):
    import geocrb.estimation as est

    monkeypatch.setattr(est.matkernel, "trace_norm", lambda m: -1.0)
    with pytest.raises(NumericalInconsistency):
        holevo_sandwich(np.eye(2), np.array([[0, 0.2], [-0.2, 0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(2, 3))
def test_bounds_properties_on_random_models(seed, n, d):
    rng = np.random.default_rng(seed)
    model = random_unitary_model(rng, n, d)
    theta = rng.uniform(-3, 3, size=d)
    rep = bounds_at(model, theta)
    assert 0.0 <= rep.gamma <= 1.0
    assert rep.spectrum.gamma_raw <= 1 + 1e-8
    tol = 1e-9 * rep.sld_crb
    assert rep.sld_crb <= rep.sandwich_mid + tol
    assert rep.sandwich_mid <= rep.sandwich_gamma + tol
    assert rep.sandwich_gamma <= rep.sandwich_two + tol
    for mu in range(d):
        for nu in range(mu + 1, d):
            assert uncertainty_check(model, theta, mu, nu) >= -1e-10


@pytest.mark.parametrize(
    "model,theta",
    [
        (qubit_model(), (1.1, 0.4)),
        (qutrit_model(), (0.6, 1.0, 2.0)),
        (ququart_model(), (0.6, 1.0, 2.0, 3.0)),
    ],
)
def test_sld_route_matches_geometry(model, theta):
    slds = sld_pure(model, theta, "analytic")
    psi = model.evaluate(theta)
    tang = tangents(model, theta, "analytic")
    d_rho = [np.outer(t, psi.conj()) + np.outer(psi, t.conj()) for t in tang.T]
    assert sld_residual(slds, d_rho) < 1e-14
    g, f = split(qgt(model, theta, "analytic"))
    np.testing.assert_allclose(qfim_from_sld(slds.rho, slds), 4 * g, atol=1e-12)
    np.testing.assert_allclose(uhlmann_from_sld(slds.rho, slds), f, atol=1e-12)


def test_uhlmann_sign_on_qubit():
    slds = sld_pure(qubit_model(), (1.0, 0.0), "analytic")
    assert uhlmann_from_sld(slds.rho, slds)[0, 1] == pytest.approx(0.5 * math.sin(1.0), abs=1e-12)


def test_uncertainty_slack_values():
    assert uncertainty_check(qubit_model(), (1.0, 0.0), 0, 1) == pytest.approx(0.0, abs=1e-14)
    assert uncertainty_check(qutrit_model(), QUARTER, 1, 2) == pytest.approx(0.03125, abs=1e-14)
    assert uncertainty_slack(np.eye(2), np.zeros((2, 2)), 0, 1) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 4))
def test_attainable_matrix_form_equals_eigenvalue_form(seed, n, d):
    rng = np.random.default_rng(seed)
    model = random_unitary_model(rng, n, d)
    theta = rng.uniform(-3, 3, size=d)
    g, f = split(qgt(model, theta, "analytic"))
    j = qfim(g)
    spec = gamma_spectrum(j, f)
    if spec.rank < d or np.linalg.cond(j) > 1e6:
        return
    assert attainable_qcrb_matrix(j, f) == pytest.approx(attainable_qcrb(spec), rel=1e-6)


def test_attainable_matrix_form_on_qutrit():
    g, f = split(qgt(qutrit_model(), (0.4, 0.0, 0.0), "analytic"))
    assert attainable_qcrb_matrix(4 * g, f) == pytest.approx(5.0, abs=1e-6)
    with pytest.raises(IncompatibleSupport):
        attainable_qcrb_matrix(np.diag([1.0, 0.0]), np.zeros((2, 2)))
