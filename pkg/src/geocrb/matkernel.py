"""Small dense matrix kernel.

Only what the rest of the package needs: a cyclic Jacobi eigensolver for
Hermitian matrices, spectral functions built on it (pseudo-inverse,
powers on the support, unitary exponentials) and the trace norm.
Dimensions are tiny (d <= 8), so everything is dense and deterministic.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonConvergence

HERMITICITY_TOL = 1e-12
PINV_REL_TOL = 1e-10
_EPS = np.finfo(float).eps


def hermitian_residual(m: np.ndarray) -> float:
    """max |m_ij - conj(m_ji)|."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def as_hermitian(m, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate `m` as Hermitian and return its exactly-Hermitian part.

    The residual is checked against ``tol * max(1, |m|_max)`` so that
    products of well-scaled matrices are not rejected for rounding.
    """
    m = np.array(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    res = hermitian_residual(m)
    if res > tol * scale:
        raise ValueError(f"matrix is not Hermitian (residual {res:.3e})")
    return 0.5 * (m + m.conj().T)


def herm_eig(m, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.

    Parameters
    ----------
    m : array_like
        Hermitian matrix (real symmetric is fine).
    max_sweeps : int
        Upper bound on full sweeps over the off-diagonal pairs.

    Returns
    -------
    eigenvalues : ndarray, ascending
    eigenvectors : ndarray
        Unitary matrix whose columns are the eigenvectors.

    Raises
    ------
    NonConvergence
        If the off-diagonal norm does not fall below rounding level.
    """
    a = as_hermitian(m)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    frob = float(np.linalg.norm(a))
    if n == 1 or frob == 0.0:
        w = np.real(np.diag(a)).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]

    target = _EPS * frob
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b < 1e-3 * target / n:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / b
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * b)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # D P D^dag with D = diag(1, conj(phase)) reduces the pair to the real case
                rot = np.array([[c, s * phase], [-s * np.conj(phase), c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * b
                a[q, q] = aqq + t * b
    else:
        raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _real_symmetric(m) -> np.ndarray:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        if np.max(np.abs(m.imag), initial=0.0) > HERMITICITY_TOL * max(1.0, np.max(np.abs(m), initial=0.0)):
            raise ValueError("expected a real matrix")
        m = m.real
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def sym_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """herm_eig for real symmetric input, returning real eigenvectors."""
    w, v = herm_eig(_real_symmetric(m))
    # eigenvectors of a real symmetric matrix can be chosen real; strip the column phase
    for k in range(v.shape[1]):
        j = int(np.argmax(np.abs(v[:, k])))
        v[:, k] *= np.conj(v[j, k]) / abs(v[j, k])
    return w, np.real(v)


def support_mask(eigenvalues: np.ndarray, rel_tol: float = PINV_REL_TOL) -> np.ndarray:
    """Eigenvalues treated as nonzero: |lambda| > rel_tol * max|lambda|."""
    lam_max = float(np.max(np.abs(eigenvalues), initial=0.0))
    if lam_max == 0.0:
        return np.zeros(eigenvalues.shape, dtype=bool)
    return np.abs(eigenvalues) > rel_tol * lam_max


def pinv_sym(m, rel_tol: float = PINV_REL_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a real symmetric matrix."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    w, v = sym_eig(m)
    keep = support_mask(w, rel_tol)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = (v * inv) @ v.T
    return 0.5 * (out + out.T)


def psd_power(m, power: float, rel_tol: float = PINV_REL_TOL) -> np.ndarray:
    """m**power on the support of a PSD real symmetric matrix (0 elsewhere).

    Tiny negative eigenvalues from rounding are treated as null.
    """
    w, v = sym_eig(m)
    keep = support_mask(w, rel_tol) & (w > 0)
    out_w = np.zeros_like(w)
    out_w[keep] = w[keep] ** power
    out = (v * out_w) @ v.T
    return 0.5 * (out + out.T)


def null_projector(m, rel_tol: float = PINV_REL_TOL) -> np.ndarray:
    """Orthogonal projector onto the numerical null space of a symmetric matrix."""
    w, v = sym_eig(m)
    vn = v[:, ~support_mask(w, rel_tol)]
    return vn @ vn.T


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix.

    Uses the Hermitian dilation [[0, M], [M^dag, 0]] whose eigenvalues are
    the singular values with both signs.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    dil = np.zeros((2 * n, 2 * n), dtype=complex)
    dil[:n, n:] = m
    dil[n:, :n] = m.conj().T
    w, _ = herm_eig(dil)
    return float(0.5 * np.sum(np.abs(w)))


def unitary_from_eig(eigenvalues: np.ndarray, eigenvectors: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) from a precomputed eigendecomposition of H."""
    return (eigenvectors * np.exp(-1j * t * eigenvalues)) @ eigenvectors.conj().T


def expm_hermitian(h, t: float = 1.0) -> np.ndarray:
    """exp(-i t H) for Hermitian H."""
    w, v = herm_eig(h)
    return unitary_from_eig(w, v, t)
