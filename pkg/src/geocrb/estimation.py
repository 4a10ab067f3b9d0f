"""Estimation bounds built from the QFIM and the Berry/Uhlmann curvature.

Everything operates on the support of J: when the QFIM is singular the
null directions are reported as inestimable and all inverses are
Moore-Penrose pseudo-inverses with relative cutoff ``rank_tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import matkernel
from .errors import IncompatibleSupport, IndexOutOfRange, NumericalInconsistency
from .geometry import generator_moments, qgt, split
from .models import DEFAULT_STEP, StateModel, tangents

RANK_TOL = 1e-10
GAMMA_CLAMP = 1e-6
ORDER_TOL = 1e-9


def qfim(metric) -> np.ndarray:
    """J = 4 g."""
    g = np.asarray(metric, dtype=float)
    return 4.0 * 0.5 * (g + g.T)


def _support_tol(j: np.ndarray, rank_tol: float) -> float:
    # a pure-state F satisfies F_uv^2 <= J_uu J_vv / 4, so leakage into a
    # direction cut at rank_tol * lambda_max is at most ~sqrt(rank_tol) * lambda_max
    lam_max = float(np.max(np.abs(np.diag(j)), initial=0.0))
    return 10.0 * math.sqrt(rank_tol) * max(lam_max, 1e-300) + 1e-12


def inestimable_axes(j, rank_tol: float = RANK_TOL) -> list[int]:
    """Axes with no component on the support of J."""
    j = np.asarray(j, dtype=float)
    w, v = matkernel.sym_eig(j)
    vs = v[:, matkernel.support_mask(w, rank_tol) & (w > 0)]
    weight = np.sum(vs**2, axis=1)
    return [int(i) for i in np.flatnonzero(weight < 1e-8)]


def _check_support(j, m, rank_tol, what):
    p_null = matkernel.null_projector(j, rank_tol)
    leak = float(np.max(np.abs(p_null @ m), initial=0.0))
    tol = _support_tol(j, rank_tol)
    if leak > tol:
        raise IncompatibleSupport(f"{what} has weight {leak:.3e} outside the range of J (tol {tol:.1e})")


@dataclass(frozen=True)
class GammaSpectrum:
    """Eigenvalues of 2i J^{-1/2} F J^{-1/2}, sorted by decreasing |value|.

    ``raw`` keeps the unclamped values; ``eigenvalues`` has excursions above
    1 (by at most GAMMA_CLAMP) clamped back to +-1.
    """

    eigenvalues: np.ndarray
    raw: np.ndarray
    rank: int

    @property
    def gamma(self) -> float:
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))

    @property
    def gamma_raw(self) -> float:
        return float(np.max(np.abs(self.raw), initial=0.0))


def gamma_spectrum(j, f, rank_tol: float = RANK_TOL) -> GammaSpectrum:
    """Characterization-number spectrum of the pair (J, F).

    Uses the Hermitian form 2i J^{-1/2} F J^{-1/2}, which shares its
    spectrum with 2i J^{-1} F but is real-diagonalizable by construction.
    """
    j = np.asarray(j, dtype=float)
    f = np.asarray(f, dtype=float)
    if j.shape != f.shape or j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise ValueError("J and F must be square matrices of the same size")
    _check_support(j, f, rank_tol, "F")
    w, _ = matkernel.sym_eig(j)
    rank = int(np.sum(matkernel.support_mask(w, rank_tol) & (w > 0)))
    k = matkernel.psd_power(j, -0.5, rank_tol)
    m = 2j * (k @ f @ k)
    ev, _ = matkernel.herm_eig(0.5 * (m + m.conj().T))
    order = np.lexsort((-ev, -np.abs(ev)))
    raw = ev[order]
    excess = np.max(np.abs(raw), initial=0.0) - 1.0
    if excess > GAMMA_CLAMP:
        raise NumericalInconsistency(f"characterization eigenvalue exceeds 1 by {excess:.3e}")
    return GammaSpectrum(np.clip(raw, -1.0, 1.0), raw, rank)


def weight_matrix(kind, j) -> np.ndarray:
    """'qfim' -> J, 'identity' -> I, or a custom PSD array."""
    j = np.asarray(j, dtype=float)
    if isinstance(kind, str):
        if kind == "qfim":
            return j.copy()
        if kind == "identity":
            return np.eye(j.shape[0])
        raise ValueError(f"unknown weight kind {kind!r}")
    w = np.asarray(kind, dtype=float)
    if w.shape != j.shape:
        raise ValueError("weight matrix shape does not match J")
    ev, _ = matkernel.sym_eig(w)
    if ev[0] < -1e-9:
        raise ValueError("weight matrix must be positive semidefinite")
    return 0.5 * (w + w.T)


def sld_crb_scalar(j, w=None, rank_tol: float = RANK_TOL) -> float:
    """Tr[W J^+]; W defaults to J."""
    j = np.asarray(j, dtype=float)
    w = j if w is None else weight_matrix(w, j)
    _check_support(j, w, rank_tol, "W")
    return float(np.trace(w @ matkernel.pinv_sym(j, rank_tol)))


def attainable_qcrb(spectrum: GammaSpectrum | Sequence[float]) -> float:
    """sum_i 2 / (1 + sqrt(1 - gamma_i^2)) over the full spectrum (W = J)."""
    ev = spectrum.eigenvalues if isinstance(spectrum, GammaSpectrum) else np.asarray(spectrum, float)
    ev = np.clip(np.abs(ev), 0.0, 1.0)
    return float(np.sum(2.0 / (1.0 + np.sqrt(1.0 - ev**2))))


def attainable_qcrb_matrix(j, f, rank_tol: float = RANK_TOL) -> float:
    """Tr[(Re sqrt(I + 2i J^{-1/2} F J^{-1/2}))^{-2}] for full-rank J.

    Independent of the eigenvalue form: the square root is taken of the
    whole matrix and only its entrywise real part is inverted.
    """
    j = np.asarray(j, dtype=float)
    lam, _ = matkernel.sym_eig(j)
    if not np.all(matkernel.support_mask(lam, rank_tol) & (lam > 0)):
        raise IncompatibleSupport("matrix form needs a full-rank QFIM")
    k = matkernel.psd_power(j, -0.5, rank_tol)
    m = 2j * (k @ np.asarray(f, dtype=float) @ k)
    w, v = matkernel.herm_eig(np.eye(j.shape[0]) + 0.5 * (m + m.conj().T))
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    re_root = root.real
    ev, _ = matkernel.sym_eig(0.5 * (re_root + re_root.T))
    return float(np.sum(ev**-2.0))


@dataclass(frozen=True)
class BoundReport:
    theta: Optional[np.ndarray]
    j: np.ndarray
    f: np.ndarray
    w: np.ndarray
    spectrum: GammaSpectrum
    sld_crb: float
    sandwich_mid: float
    sandwich_gamma: float
    sandwich_two: float
    attainable_qcrb: float
    inestimable: list = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return self.spectrum.gamma


def holevo_sandwich(j, f, w=None, rank_tol: float = RANK_TOL, theta=None) -> BoundReport:
    """C^S <= C^S + ||sqrt(W) J^+ F J^+ sqrt(W)||_1 <= (1+gamma) C^S <= 2 C^S.

    The Holevo bound itself sits between the first two terms and is not
    computed. ``attainable_qcrb`` always refers to W = J.
    """
    j = np.asarray(j, dtype=float)
    f = np.asarray(f, dtype=float)
    w = j.copy() if w is None else weight_matrix(w, j)
    spec = gamma_spectrum(j, f, rank_tol)
    cs = sld_crb_scalar(j, w, rank_tol)
    jp = matkernel.pinv_sym(j, rank_tol)
    sw = matkernel.psd_power(w, 0.5, rank_tol)
    mid = cs + matkernel.trace_norm(sw @ jp @ f @ jp @ sw)
    s_gamma = (1.0 + spec.gamma) * cs
    s_two = 2.0 * cs
    tol = ORDER_TOL * max(1.0, abs(cs))
    if not (cs <= mid + tol and mid <= s_gamma + tol and s_gamma <= s_two + tol):
        raise NumericalInconsistency(
            f"bound ordering violated: {cs:.12g}, {mid:.12g}, {s_gamma:.12g}, {s_two:.12g}"
        )
    return BoundReport(
        theta=None if theta is None else np.asarray(theta, dtype=float),
        j=j,
        f=f,
        w=w,
        spectrum=spec,
        sld_crb=cs,
        sandwich_mid=mid,
        sandwich_gamma=s_gamma,
        sandwich_two=s_two,
        attainable_qcrb=attainable_qcrb(spec),
        inestimable=inestimable_axes(j, rank_tol),
    )


def subspace(j, f, axes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Principal submatrices of J and F on ``axes``."""
    j = np.asarray(j, dtype=float)
    f = np.asarray(f, dtype=float)
    axes = list(axes)
    d = j.shape[0]
    if not axes or len(set(axes)) != len(axes):
        raise IndexOutOfRange("axes must be nonempty and distinct")
    if any(not 0 <= a < d for a in axes):
        raise IndexOutOfRange(f"axes {axes} out of range for dimension {d}")
    ix = np.ix_(axes, axes)
    return j[ix].copy(), f[ix].copy()


# ---------------------------------------------------------------------------
# SLD route


@dataclass(frozen=True)
class SLDSet:
    rho: np.ndarray
    operators: list


def sld_pure(model: StateModel, theta, scheme: str = "richardson", step: float = DEFAULT_STEP) -> SLDSet:
    """L_mu = 2 d_mu rho for rho = |psi><psi|."""
    values = model.check_domain(theta)
    psi = model.evaluate(values)
    tang = tangents(model, values, scheme, step)
    rho = np.outer(psi, psi.conj())
    ops = []
    for mu in range(tang.shape[1]):
        d_rho = np.outer(tang[:, mu], psi.conj()) + np.outer(psi, tang[:, mu].conj())
        ops.append(2.0 * d_rho)
    return SLDSet(rho, ops)


def sld_residual(slds: SLDSet, d_rho: Sequence[np.ndarray]) -> float:
    """max |d_mu rho - (L rho + rho L)/2| over all entries and axes."""
    rho = slds.rho
    return max(
        float(np.max(np.abs(dr - 0.5 * (l @ rho + rho @ l)))) for l, dr in zip(slds.operators, d_rho)
    )


def qfim_from_sld(rho, slds: SLDSet | Sequence[np.ndarray]) -> np.ndarray:
    """J_{mu nu} = Tr[rho (L_mu L_nu + L_nu L_mu) / 2]."""
    ops = slds.operators if isinstance(slds, SLDSet) else list(slds)
    d = len(ops)
    out = np.zeros((d, d))
    for mu in range(d):
        for nu in range(mu, d):
            val = 0.5 * np.trace(rho @ (ops[mu] @ ops[nu] + ops[nu] @ ops[mu])).real
            out[mu, nu] = out[nu, mu] = val
    return out


def uhlmann_from_sld(rho, slds: SLDSet | Sequence[np.ndarray]) -> np.ndarray:
    """Mean Uhlmann curvature (i/4) Tr[rho [L_mu, L_nu]] in the Berry sign convention."""
    ops = slds.operators if isinstance(slds, SLDSet) else list(slds)
    d = len(ops)
    out = np.zeros((d, d))
    for mu in range(d):
        for nu in range(mu + 1, d):
            val = (0.25j * np.trace(rho @ (ops[mu] @ ops[nu] - ops[nu] @ ops[mu]))).real
            out[mu, nu] = val
            out[nu, mu] = -val
    return out


# ---------------------------------------------------------------------------
# uncertainty relation


def uncertainty_slack(g, f, mu: int, nu: int) -> float:
    """g_mm g_nn - F_mn^2 / 4 - g_mn^2 (Robertson-Schroedinger slack)."""
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    return float(g[mu, mu] * g[nu, nu] - 0.25 * f[mu, nu] ** 2 - g[mu, nu] ** 2)


def uncertainty_check(model: StateModel, theta, mu: int, nu: int) -> float:
    """Signed slack of the Robertson-Schroedinger relation for G_mu, G_nu."""
    values = model.check_domain(theta)
    psi = model.evaluate(values)
    gens = model.generators(values)
    cov, comm = generator_moments(gens, psi)
    return uncertainty_slack(cov, comm, mu, nu)


def bounds_at(model: StateModel, theta, scheme: str = "richardson", w=None, axes=None,
              rank_tol: float = RANK_TOL) -> BoundReport:
    """QGT -> (J, F) -> optional subspace -> BoundReport."""
    values = model.check_domain(theta)
    g, f = split(qgt(model, values, scheme))
    j = qfim(g)
    if axes is not None:
        j, f = subspace(j, f, axes)
    return holevo_sandwich(j, f, w, rank_tol, theta=values)
