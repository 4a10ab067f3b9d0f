"""Quantum geometric tensor, its metric/curvature split, and sphere integrals.

Sign convention: the Berry curvature is F_{mu nu} = -2 Im chi_{mu nu}
= i <[G_mu, G_nu]>, i.e. chi = g - (i/2) F. This is the convention in
which the two-level model has F_{theta phi} = +sin(theta)/2 and unit
Chern number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matkernel
from .errors import DimensionMismatch, DomainError, NumericalInconsistency
from .models import (
    DEFAULT_STEP,
    StateModel,
    qutrit_model,
    tangents,
)

PSD_TOL = 1e-9
HERMITIAN_TOL = 1e-9


@dataclass(frozen=True)
class QGTensor:
    chi: np.ndarray
    theta: np.ndarray
    method: str

    @property
    def dim(self) -> int:
        return self.chi.shape[0]

    @property
    def metric(self) -> np.ndarray:
        return split(self)[0]

    @property
    def curvature(self) -> np.ndarray:
        return split(self)[1]

    @property
    def qfim(self) -> np.ndarray:
        return 4.0 * self.metric


def _theta(model: StateModel, theta) -> np.ndarray:
    values = model.check_domain(theta)
    return values.copy()


def _check_qgt(chi: np.ndarray) -> None:
    res = matkernel.hermitian_residual(chi)
    if res > HERMITIAN_TOL:
        raise NumericalInconsistency(f"QGT not Hermitian (residual {res:.2e})")
    w, _ = matkernel.herm_eig(0.5 * (chi + chi.conj().T))
    if w[0] < -PSD_TOL:
        raise NumericalInconsistency(f"QGT not positive semidefinite (min eigenvalue {w[0]:.2e})")


def chi_from_tangents(psi: np.ndarray, tang: np.ndarray) -> np.ndarray:
    """chi_{mu nu} = <d_mu psi|d_nu psi> - <d_mu psi|psi><psi|d_nu psi>."""
    overlap = tang.conj().T @ psi
    chi = tang.conj().T @ tang - np.outer(overlap, overlap.conj())
    return 0.5 * (chi + chi.conj().T)


def qgt(model: StateModel, theta, scheme: str = "richardson", step: float = DEFAULT_STEP,
        validate: bool = True) -> QGTensor:
    """Quantum geometric tensor of ``model`` at ``theta``.

    Finite-difference schemes use gauge-fixed stencils (see
    :func:`geocrb.models.tangent`). ``validate`` runs the Hermitian/PSD
    audit; sphere integrations switch it off for speed.
    """
    values = _theta(model, theta)
    psi = model.evaluate(values)
    tang = tangents(model, values, scheme, step, gauge_fix=(scheme != "analytic"))
    chi = chi_from_tangents(psi, tang)
    if validate:
        _check_qgt(chi)
    method = "analytic-tangent" if scheme == "analytic" else "finite-difference"
    return QGTensor(chi, values, method)


def split(chi) -> tuple[np.ndarray, np.ndarray]:
    """(g, F) with g = Re chi (symmetrized) and F = -2 Im chi (antisymmetrized)."""
    if isinstance(chi, QGTensor):
        chi = chi.chi
    chi = np.asarray(chi, dtype=complex)
    g = chi.real
    f = -2.0 * chi.imag
    return 0.5 * (g + g.T), 0.5 * (f - f.T)


def qgt_from_generators(model: StateModel, theta, validate: bool = True) -> QGTensor:
    """QGT from generator moments.

    g_{mu nu} = <{G_mu, G_nu}>/2 - <G_mu><G_nu> and F_{mu nu} = i <[G_mu, G_nu]>.
    """
    values = _theta(model, theta)
    psi = model.evaluate(values)
    gens = model.generators(values)
    # columns G_mu |psi>; chi_{mu nu} = <G_mu G_nu> - <G_mu><G_nu>
    gpsi = np.stack([g @ psi for g in gens], axis=1)
    mean = gpsi.conj().T @ psi
    chi = gpsi.conj().T @ gpsi - np.outer(mean, mean.conj())
    chi = 0.5 * (chi + chi.conj().T)
    if validate:
        _check_qgt(chi)
    return QGTensor(chi, values, "generator")


def generator_moments(gens, psi) -> tuple[np.ndarray, np.ndarray]:
    """(covariance, i<[G_mu, G_nu]>) evaluated operator by operator."""
    d = len(gens)
    mean = np.array([np.vdot(psi, g @ psi).real for g in gens])
    cov = np.zeros((d, d))
    comm = np.zeros((d, d))
    for mu in range(d):
        for nu in range(d):
            anti = gens[mu] @ gens[nu] + gens[nu] @ gens[mu]
            com = gens[mu] @ gens[nu] - gens[nu] @ gens[mu]
            cov[mu, nu] = 0.5 * np.vdot(psi, anti @ psi).real - mean[mu] * mean[nu]
            comm[mu, nu] = (1j * np.vdot(psi, com @ psi)).real
    return cov, comm


def three_form(qfim, curvature, axes=(0, 1, 2)) -> float:
    """sqrt(J_pp F_ab^2 + J_bb F_ap^2 - 2 J_bp F_ab F_ap) for axes (a, b, p).

    A radicand that is negative only by rounding (>= -1e-12) is clamped to 0.
    """
    j = np.asarray(qfim, dtype=float)
    f = np.asarray(curvature, dtype=float)
    if j.shape != (3, 3) or f.shape != (3, 3):
        raise DimensionMismatch("three_form needs 3x3 QFIM and curvature")
    if sorted(axes) != [0, 1, 2]:
        raise ValueError("axes must be a permutation of (0, 1, 2)")
    a, b, p = axes
    rad = j[p, p] * f[a, b] ** 2 + j[b, b] * f[a, p] ** 2 - 2 * j[b, p] * f[a, b] * f[a, p]
    if rad < 0:
        if rad < -1e-12:
            raise NumericalInconsistency(f"negative three-form radicand {rad:.3e}")
        rad = 0.0
    return math.sqrt(rad)


def _best_scheme(model: StateModel) -> str:
    return "analytic" if model.analytic_tangent is not None else "richardson"


def _midpoints(lo: float, hi: float, n: int) -> tuple[np.ndarray, float]:
    if n < 1:
        raise ValueError("grid sizes must be positive")
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


def _require_axis(model, axis, bounds, period):
    b = model.bounds[axis]
    ok_bounds = (b is None and bounds is None) or (
        b is not None and bounds is not None and np.allclose(b, bounds, rtol=0, atol=1e-12)
    )
    ok_period = (period is None) or (
        model.periodicity[axis] is not None and abs(model.periodicity[axis] - period) < 1e-12
    )
    if not (ok_bounds and ok_period):
        raise DomainError(
            f"axis {model.axis_labels[axis]!r} of {model.name!r} is incompatible with the sphere integration"
        )


def chern_number(model: StateModel, grid=(200, 200), scheme: str | None = None) -> float:
    """(1/2pi) * sum of F_{theta phi} over a midpoint grid on [0, pi] x [0, 2pi)."""
    if model.param_dim != 2:
        raise DomainError("Chern number integration needs a two-parameter model")
    _require_axis(model, 0, (0.0, math.pi), None)
    _require_axis(model, 1, None, 2 * math.pi)
    scheme = scheme or _best_scheme(model)
    n_t, n_p = grid
    ts, dt = _midpoints(0.0, math.pi, n_t)
    ps, dp = _midpoints(0.0, 2 * math.pi, n_p)
    terms = [
        split(qgt(model, (t, p), scheme, validate=False))[1][0, 1]
        for t in ts
        for p in ps
    ]
    # fsum over a fixed traversal order keeps the result bit-reproducible
    return math.fsum(terms) * dt * dp / (2 * math.pi)


def dd_invariant(model: StateModel | None = None, grid=(100, 20, 20), scheme: str | None = None) -> float:
    """(1/2pi^2) * sum of the three-form over [0, pi/2] x [0, 2pi)^2."""
    model = model or qutrit_model()
    if model.param_dim != 3:
        raise DomainError("Dixmier-Douady integration needs a three-parameter model")
    _require_axis(model, 0, (0.0, math.pi / 2), None)
    _require_axis(model, 1, None, 2 * math.pi)
    _require_axis(model, 2, None, 2 * math.pi)
    scheme = scheme or _best_scheme(model)
    n_a, n_b, n_p = grid
    al, da = _midpoints(0.0, math.pi / 2, n_a)
    be, db = _midpoints(0.0, 2 * math.pi, n_b)
    ph, dp = _midpoints(0.0, 2 * math.pi, n_p)
    terms = []
    for a in al:
        for b in be:
            for p in ph:
                g, f = split(qgt(model, (a, b, p), scheme, validate=False))
                terms.append(three_form(4.0 * g, f))
    return math.fsum(terms) * da * db * dp / (2 * math.pi**2)
