"""Parametrized pure-state families and their parameter derivatives.

A :class:`StateModel` maps a real parameter vector to a normalized state.
Built-in families are the two-level sphere model, the three-angle qutrit,
the four-parameter ququart, plus arbitrary products of exponentials of
fixed generators (:func:`unitary_family`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import matkernel
from .errors import DimensionMismatch, DomainError, MissingGenerators

TWO_PI = 2.0 * np.pi
NORM_TOL = 1e-12
DEFAULT_STEP = 1e-3
SCHEMES = ("analytic", "central2", "richardson")


@dataclass(frozen=True)
class ParameterPoint:
    values: np.ndarray
    axis_labels: tuple[str, ...]
    periodicity: tuple[Optional[float], ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "values", values)
        d = len(values)
        if d < 1 or len(self.axis_labels) != d or len(self.periodicity) != d:
            raise DimensionMismatch("values, axis_labels and periodicity must share length d >= 1")

    @property
    def dim(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def point_values(theta) -> np.ndarray:
    if isinstance(theta, ParameterPoint):
        return theta.values
    return np.array(theta, dtype=float).reshape(-1)


@dataclass(frozen=True)
class StateModel:
    """theta -> |psi(theta)>, optionally with analytic derivatives and generators.

    ``bounds[mu]`` is ``(lo, hi)`` for closed-interval axes and ``None`` for
    unbounded/periodic ones. ``generator_set(theta)`` returns Hermitian
    operators G_mu with |d_mu psi> = -i G_mu |psi>.
    """

    name: str
    hilbert_dim: int
    axis_labels: tuple[str, ...]
    evaluator: Callable[[np.ndarray], np.ndarray]
    periodicity: tuple[Optional[float], ...] = ()
    bounds: tuple[Optional[tuple[float, float]], ...] = ()
    analytic_tangent: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    generator_set: Optional[Callable[[np.ndarray], list]] = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = len(self.axis_labels)
        if not self.periodicity:
            object.__setattr__(self, "periodicity", (None,) * d)
        if not self.bounds:
            object.__setattr__(self, "bounds", (None,) * d)
        if len(self.periodicity) != d or len(self.bounds) != d:
            raise DimensionMismatch("periodicity/bounds length must equal the number of axes")

    @property
    def param_dim(self) -> int:
        return len(self.axis_labels)

    def axis_index(self, axis) -> int:
        if isinstance(axis, str):
            try:
                return self.axis_labels.index(axis)
            except ValueError:
                raise DomainError(f"model {self.name!r} has no axis {axis!r}") from None
        axis = int(axis)
        if not 0 <= axis < self.param_dim:
            raise DomainError(f"axis index {axis} out of range for {self.name!r}")
        return axis

    def point(self, *values) -> ParameterPoint:
        if len(values) == 1 and np.ndim(values[0]) == 1:
            values = tuple(values[0])
        return ParameterPoint(np.asarray(values, dtype=float), self.axis_labels, self.periodicity)

    def check_domain(self, theta) -> np.ndarray:
        values = point_values(theta)
        if len(values) != self.param_dim:
            raise DimensionMismatch(
                f"model {self.name!r} expects {self.param_dim} parameters, got {len(values)}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("parameter values must be finite")
        for label, x, b in zip(self.axis_labels, values, self.bounds):
            if b is not None and not (b[0] <= x <= b[1]):
                raise DomainError(f"{label}={x:g} outside [{b[0]:g}, {b[1]:g}]")
        return values

    def evaluate(self, theta) -> np.ndarray:
        values = self.check_domain(theta)
        psi = np.asarray(self.evaluator(values), dtype=complex)
        if psi.shape != (self.hilbert_dim,):
            raise DimensionMismatch(f"evaluator returned shape {psi.shape}")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized at theta={values} (norm {norm!r})")
        return psi

    def generators(self, theta) -> list[np.ndarray]:
        if self.generator_set is None:
            raise MissingGenerators(f"model {self.name!r} has no generator set")
        values = self.check_domain(theta)
        return [np.asarray(g, dtype=complex) for g in self.generator_set(values)]


@dataclass(frozen=True)
class TangentVector:
    amplitudes: np.ndarray
    axis: int
    scheme: str
    step: float
    error_estimate: float = 0.0


# ---------------------------------------------------------------------------
# built-in models


def _qubit_state(v):
    th, ph = v
    return np.array([np.cos(th / 2), -np.sin(th / 2) * np.exp(-1j * ph)])


def _qubit_tangent(v, axis):
    th, ph = v
    if axis == 0:
        return np.array([-0.5 * np.sin(th / 2), -0.5 * np.cos(th / 2) * np.exp(-1j * ph)])
    return np.array([0.0, 1j * np.sin(th / 2) * np.exp(-1j * ph)])


_SZ = np.diag([1.0, -1.0]).astype(complex)
_SY = np.array([[0, -1j], [1j, 0]])


def _qubit_generators(v):
    # psi = e^{-i phi/2} e^{i phi sz/2} e^{i theta sy/2} |0>
    _, ph = v
    rz = np.diag([np.exp(0.5j * ph), np.exp(-0.5j * ph)])
    g_theta = -rz @ (0.5 * _SY) @ rz.conj().T
    g_phi = 0.5 * (np.eye(2) - _SZ)
    return [g_theta, g_phi]


def qubit_model() -> StateModel:
    """cos(theta/2)|0> - sin(theta/2) e^{-i phi}|1>, theta in [0, pi]."""
    return StateModel(
        name="qubit",
        hilbert_dim=2,
        axis_labels=("theta", "phi"),
        evaluator=_qubit_state,
        periodicity=(None, TWO_PI),
        bounds=((0.0, np.pi), None),
        analytic_tangent=_qubit_tangent,
        generator_set=_qubit_generators,
    )


def _qutrit_state(v):
    a, b, p = v
    return np.array([np.cos(a) * np.exp(-1j * b), -1.0, np.sin(a) * np.exp(-1j * p)]) / np.sqrt(2)


def _qutrit_tangent(v, axis):
    a, b, p = v
    if axis == 0:
        out = [-np.sin(a) * np.exp(-1j * b), 0.0, np.cos(a) * np.exp(-1j * p)]
    elif axis == 1:
        out = [-1j * np.cos(a) * np.exp(-1j * b), 0.0, 0.0]
    else:
        out = [0.0, 0.0, -1j * np.sin(a) * np.exp(-1j * p)]
    return np.array(out, dtype=complex) / np.sqrt(2)


def _plane_rotation_generator(n, i, j, phase_i, phase_j):
    """Hermitian G with -iG rotating e^{i phase_i}|i> into e^{i phase_j}|j>."""
    k = np.zeros((n, n), dtype=complex)
    k[j, i] = np.exp(1j * (phase_j - phase_i))
    k[i, j] = -np.conj(k[j, i])
    return 1j * k


def _projector(n, i, sign=1.0):
    g = np.zeros((n, n), dtype=complex)
    g[i, i] = sign
    return g


def _qutrit_generators(v):
    _, b, p = v
    return [
        _plane_rotation_generator(3, 0, 2, -b, -p),
        _projector(3, 0),
        _projector(3, 2),
    ]


def qutrit_model() -> StateModel:
    """(cos a e^{-i b}, -1, sin a e^{-i phi}) / sqrt 2 with a in [0, pi/2]."""
    return StateModel(
        name="qutrit",
        hilbert_dim=3,
        axis_labels=("alpha", "beta", "phi"),
        evaluator=_qutrit_state,
        periodicity=(None, TWO_PI, TWO_PI),
        bounds=((0.0, np.pi / 2), None, None),
        analytic_tangent=_qutrit_tangent,
        generator_set=_qutrit_generators,
    )


def qutrit_eigenframe(theta) -> tuple[np.ndarray, np.ndarray]:
    """The two states orthogonal to the qutrit model state at `theta`.

    psi1 = (-sin a e^{-i b}, 0, cos a e^{-i phi}),
    psi2 = (cos a e^{-i b}, 1, sin a e^{-i phi}) / sqrt 2.
    """
    a, b, p = qutrit_model().check_domain(theta)
    eb, ep = np.exp(-1j * b), np.exp(-1j * p)
    psi1 = np.array([-np.sin(a) * eb, 0.0, np.cos(a) * ep])
    psi2 = np.array([np.cos(a) * eb, 1.0, np.sin(a) * ep]) / np.sqrt(2)
    return psi1, psi2


def _ququart_state(v):
    a, p1, p2, p3 = v
    return np.array(
        [np.cos(a) * np.exp(1j * p1), np.exp(1j * p2), np.sin(a) * np.exp(1j * p3), 1.0]
    ) / np.sqrt(3)


def _ququart_tangent(v, axis):
    a, p1, p2, p3 = v
    out = np.zeros(4, dtype=complex)
    if axis == 0:
        out[0] = -np.sin(a) * np.exp(1j * p1)
        out[2] = np.cos(a) * np.exp(1j * p3)
    elif axis == 1:
        out[0] = 1j * np.cos(a) * np.exp(1j * p1)
    elif axis == 2:
        out[1] = 1j * np.exp(1j * p2)
    else:
        out[2] = 1j * np.sin(a) * np.exp(1j * p3)
    return out / np.sqrt(3)


def _ququart_generators(v):
    _, p1, _, p3 = v
    return [
        _plane_rotation_generator(4, 0, 2, p1, p3),
        _projector(4, 0, -1.0),
        _projector(4, 1, -1.0),
        _projector(4, 2, -1.0),
    ]


def ququart_model() -> StateModel:
    """(cos a e^{i phi1}, e^{i phi2}, sin a e^{i phi3}, 1) / sqrt 3."""
    return StateModel(
        name="ququart",
        hilbert_dim=4,
        axis_labels=("alpha", "phi1", "phi2", "phi3"),
        evaluator=_ququart_state,
        periodicity=(None, TWO_PI, TWO_PI, TWO_PI),
        bounds=((0.0, np.pi / 2), None, None, None),
        analytic_tangent=_ququart_tangent,
        generator_set=_ququart_generators,
    )


BUILTIN_MODELS = {
    "qubit": qubit_model,
    "qutrit": qutrit_model,
    "ququart": ququart_model,
}


def get_model(name: str) -> StateModel:
    try:
        return BUILTIN_MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None


# ---------------------------------------------------------------------------
# unitary families


def unitary_family(generators: Sequence, psi0, name: str = "unitary") -> StateModel:
    """psi(theta) = exp(-i theta_d G_d) ... exp(-i theta_1 G_1) |psi0>.

    The first generator acts first on ``psi0``. With this ordering the
    parameter-dependent generators are G_mu(theta) = U_> G_mu U_>^dag where
    U_> collects the exponentials of the later generators.
    """
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    n = psi0.shape[0]
    if abs(np.linalg.norm(psi0) - 1.0) > NORM_TOL:
        raise ValueError("psi0 must be normalized")
    gens = []
    for g in generators:
        g = matkernel.as_hermitian(g, tol=1e-10)
        if g.shape != (n, n):
            raise DimensionMismatch(f"generator shape {g.shape} does not match state dim {n}")
        gens.append(g)
    if not gens:
        raise DimensionMismatch("at least one generator is required")
    eigs = [matkernel.herm_eig(g) for g in gens]
    d = len(gens)

    def factors(v):
        return [matkernel.unitary_from_eig(w, vec, t) for (w, vec), t in zip(eigs, v)]

    def evaluate(v):
        psi = psi0
        for u in factors(v):
            psi = u @ psi
        return psi

    def generator_set(v):
        us = factors(v)
        out = []
        later = np.eye(n, dtype=complex)
        for mu in range(d - 1, -1, -1):
            out.append(later @ gens[mu] @ later.conj().T)
            later = later @ us[mu]
        return out[::-1]

    def tangent(v, axis):
        return -1j * generator_set(v)[axis] @ evaluate(v)

    return StateModel(
        name=name,
        hilbert_dim=n,
        axis_labels=tuple(f"t{k}" for k in range(d)),
        evaluator=evaluate,
        analytic_tangent=tangent,
        generator_set=generator_set,
    )


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T) / np.sqrt(2 * n)


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


def random_unitary_model(rng: np.random.Generator, hilbert_dim: int, n_params: int) -> StateModel:
    gens = [random_hermitian(rng, hilbert_dim) for _ in range(n_params)]
    return unitary_family(gens, random_state(rng, hilbert_dim), name=f"random-{hilbert_dim}x{n_params}")


# ---------------------------------------------------------------------------
# derivatives


def _align_phase(psi_ref, psi):
    """Rotate psi by a global phase so that <psi_ref|psi> is real and >= 0."""
    ov = np.vdot(psi_ref, psi)
    if abs(ov) == 0.0:
        return psi
    return psi * (np.conj(ov) / abs(ov))


def _stencil_kind(model: StateModel, values, axis, h) -> int:
    """0: central, +1: forward one-sided, -1: backward one-sided."""
    b = model.bounds[axis]
    if b is None:
        return 0
    lo, hi = b
    x = values[axis]
    if x - h >= lo and x + h <= hi:
        return 0
    if x + 2 * h <= hi:
        return 1
    if x - 2 * h >= lo:
        return -1
    raise DomainError(
        f"stencil of width {h:g} does not fit the {model.axis_labels[axis]} interval [{lo:g}, {hi:g}]"
    )


def _difference(model, values, axis, h, kind, psi, gauge_fix):
    def at(offset):
        v = values.copy()
        v[axis] += offset
        s = model.evaluate(v)
        return _align_phase(psi, s) if gauge_fix else s

    if kind == 0:
        return (at(h) - at(-h)) / (2 * h)
    # second-order one-sided
    return kind * (-3 * psi + 4 * at(kind * h) - at(2 * kind * h)) / (2 * h)


def tangent(
    model: StateModel,
    theta,
    axis,
    scheme: str = "richardson",
    step: float = DEFAULT_STEP,
    gauge_fix: bool = False,
) -> TangentVector:
    """|d_axis psi(theta)> by the requested scheme.

    ``central2`` is the plain central difference, ``richardson`` combines
    step h and h/2 as (4 D(h/2) - D(h)) / 3. Near a closed-interval bound
    the stencil switches to second-order one-sided differences.

    With ``gauge_fix`` the displaced states are rotated so that their
    overlap with psi(theta) is real and positive before differencing; the
    result then differs from the analytic tangent by a multiple of psi,
    which leaves the geometric tensor unchanged.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    axis = model.axis_index(axis)
    values = model.check_domain(theta).copy()
    if scheme == "analytic":
        if model.analytic_tangent is None:
            raise ValueError(f"model {model.name!r} has no analytic tangent")
        amp = np.asarray(model.analytic_tangent(values, axis), dtype=complex)
        return TangentVector(amp, axis, scheme, 0.0)

    psi = model.evaluate(values)
    kind = _stencil_kind(model, values, axis, step)
    d_h = _difference(model, values, axis, step, kind, psi, gauge_fix)
    if scheme == "central2":
        d_half = _difference(model, values, axis, step / 2, kind, psi, gauge_fix)
        err = float(np.max(np.abs(d_h - d_half))) * 4 / 3
        return TangentVector(d_h, axis, scheme, step, err)
    # same stencil family for both steps, so the leading h^2 term cancels
    d_half = _difference(model, values, axis, step / 2, kind, psi, gauge_fix)
    amp = (4 * d_half - d_h) / 3
    err = float(np.max(np.abs(d_half - d_h))) / 3
    return TangentVector(amp, axis, scheme, step, err)


def tangents(model: StateModel, theta, scheme: str = "richardson", step: float = DEFAULT_STEP,
             gauge_fix: bool = False) -> np.ndarray:
    """All tangents stacked as columns of an (n, d) array."""
    return np.stack(
        [tangent(model, theta, mu, scheme, step, gauge_fix).amplitudes for mu in range(model.param_dim)],
        axis=1,
    )
