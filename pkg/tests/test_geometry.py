import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocrb import geometry
from geocrb.errors import DimensionMismatch, DomainError, NumericalInconsistency
from geocrb.geometry import (
    chern_number,
    chi_from_tangents,
    dd_invariant,
    qgt,
    qgt_from_generators,
    split,
    three_form,
)
from geocrb.models import StateModel, qubit_model, qutrit_model, ququart_model, random_unitary_model


def test_split_convention():
    chi = np.array([[1.0, 0.1 + 0.25j], [0.1 - 0.25j, 2.0]])
    g, f = split(chi)
    np.testing.assert_allclose(g, [[1.0, 0.1], [0.1, 2.0]])
    # F = -2 Im chi
    np.testing.assert_allclose(f, [[0.0, -0.5], [0.5, 0.0]])


@pytest.mark.parametrize("theta", [0.3, 1.0, math.pi / 2, 2.5])
def test_qubit_metric_and_curvature(theta):
    g, f = split(qgt(qubit_model(), (theta, 0.7)))
    np.testing.assert_allclose(g, np.diag([0.25, 0.25 * math.sin(theta) ** 2]), atol=1e-11)
    assert f[0, 1] == pytest.approx(0.5 * math.sin(theta), abs=1e-11)


def test_qubit_at_equator_values():
    tensor = qgt(qubit_model(), (math.pi / 2, 0.0), "analytic")
    assert tensor.method == "analytic-tangent"
    np.testing.assert_allclose(tensor.qfim, np.eye(2), atol=1e-15)
    assert tensor.curvature[0, 1] == pytest.approx(0.5)


def test_qutrit_at_quarter_pi():
    tensor = qgt(qutrit_model(), (math.pi / 4, 0.0, 0.0))
    assert tensor.method == "finite-difference"
    j = tensor.qfim
    np.testing.assert_allclose(j, [[2, 0, 0], [0, 0.75, -0.25], [0, -0.25, 0.75]], atol=1e-10)
    np.testing.assert_allclose(tensor.curvature[0], [0, -0.5, 0.5], atol=1e-10)


def test_pole_of_qutrit_is_rank_deficient():
    j = qgt(qutrit_model(), (0.0, 0.0, 0.0)).qfim
    assert abs(j[2, 2]) < 1e-12
    # one-sided stencils at the boundary leave ~1e-11 of rounding
    np.testing.assert_allclose(split(qgt(qutrit_model(), (0.0, 0.0, 0.0)))[1], 0, atol=1e-9)


def test_global_phase_gauge_invariance():
    base = qutrit_model()

    def rephased(v):
        return np.exp(1j * (3 * v[1] - 2 * v[0] + v[2] ** 2)) * base.evaluator(v)

    model = StateModel("rephased", 3, base.axis_labels, rephased, base.periodicity, base.bounds)
    theta = (0.6, 1.2, -0.4)
    np.testing.assert_allclose(qgt(model, theta).chi, qgt(base, theta, "analytic").chi, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 4))
def test_qgt_is_hermitian_psd_on_random_models(seed, n, d):
    rng = np.random.default_rng(seed)
    model = random_unitary_model(rng, n, d)
    theta = rng.uniform(-3, 3, size=d)
    chi = qgt(model, theta).chi
    np.testing.assert_allclose(chi, chi.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(chi).min() > -1e-9
    np.testing.assert_allclose(qgt_from_generators(model, theta).chi, chi, atol=1e-8)


def test_generator_route_on_builtins():
    for model, theta in ((qubit_model(), (1.2, 0.3)), (qutrit_model(), (0.5, 1, 2)), (ququart_model(), (0.5, 1, 2, 3))):
        np.testing.assert_allclose(
            qgt_from_generators(model, theta).chi, qgt(model, theta, "analytic").chi, atol=1e-14
        )


def test_qgt_audit_rejects_bad_tensors():
    with pytest.raises(NumericalInconsistency):
        geometry._check_qgt(np.array([[1.0, 0.0], [0.0, -0.1]]))
    with pytest.raises(NumericalInconsistency):
        geometry._check_qgt(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_chi_from_tangents_kills_state_direction():
    psi = np.array([1.0, 0.0])
    tang = np.column_stack([psi * 2j, np.array([0.0, 1.0])])
    chi = chi_from_tangents(psi, tang)
    np.testing.assert_allclose(chi, [[0, 0], [0, 1]], atol=1e-15)


@pytest.mark.parametrize("alpha", [0.2, math.pi / 4, 1.3])
def test_three_form_saturates_at_coherent_points(alpha):
    g, f = split(qgt(qutrit_model(), (alpha, 0.4, 0.9), "analytic"))
    j = 4 * g
    h = three_form(j, f)
    assert 2 * h / math.sqrt(np.linalg.det(j)) == pytest.approx(1.0, abs=1e-12)


def test_three_form_validation():
    with pytest.raises(DimensionMismatch):
        three_form(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        three_form(np.eye(3), np.zeros((3, 3)), axes=(0, 0, 1))
    assert three_form(np.eye(3), np.zeros((3, 3))) == 0.0


def test_chern_number_coarse_grid():
    # the midpoint rule converges quadratically; a 10x10 grid is already within 0.05
    c = chern_number(qubit_model(), (10, 10))
    assert abs(c - 1.0) < 0.05
    assert chern_number(qubit_model(), (10, 10)) == c


def test_dd_invariant_coarse_grid():
    assert abs(dd_invariant(qutrit_model(), (20, 4, 4)) - 1.0) < 0.02


def test_sphere_integrals_reject_wrong_models():
    with pytest.raises(DomainError):
        chern_number(qutrit_model())
    with pytest.raises(DomainError):
        dd_invariant(qubit_model())
    flat = StateModel("flat", 2, ("a", "b"), lambda v: np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        chern_number(flat, (4, 4))
