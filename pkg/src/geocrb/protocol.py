"""Parameter-modulation Rabi protocol on the three-level model.

A Hamiltonian H(theta) = D1 |psi1><psi1| + D2 |psi2><psi2| has the qutrit
model state as its zero-energy ground state. Weakly modulating one or two
parameters at a transition frequency drives Rabi oscillations whose rates
are set by <psi_k|d_mu psi0>, so fitted rates give back the metric and
Berry curvature.

Rate relations used by :func:`reconstruct_qgt` (m = modulation amplitude,
D_k = gap of level k, S = sum_k (Omega_k / (m D_k))^2):

* single axis mu:               S = g_mm
* in phase (sin, sin):          S = g_mm + g_nn + 2 g_mn
* out of phase (sin mu, cos nu): S = g_mm + g_nn + OUT_OF_PHASE_SIGN * F_mn
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .errors import (
    DegenerateGaps,
    DomainError,
    FitFailed,
    InconsistentReconstruction,
    StepTooLarge,
)
from .geometry import qgt, split
from .models import qutrit_model

DEFAULT_GAPS = (1.0, 2.5)
DEFAULT_AMPLITUDE = 0.05
MAX_AMPLITUDE = 0.1
STEPS_PER_PERIOD = 100
MAX_STEPS = 1_000_000
NORM_DRIFT_LIMIT = 1e-8
PHASE_MODES = ("single", "in-phase", "out-of-phase")

# Sign in S_out = g_mm + g_nn + sign * F_mn. Fixed by simulating the
# alpha = pi/4 qutrit point against the direct geometric tensor
# (tests/test_protocol.py::test_out_of_phase_sign_calibration).
OUT_OF_PHASE_SIGN = -1.0


def qutrit_frame(alpha, beta, phi) -> np.ndarray:
    """Columns (psi0, psi1, psi2) of the qutrit eigenframe; broadcasts over inputs."""
    alpha, beta, phi = np.broadcast_arrays(
        np.asarray(alpha, float), np.asarray(beta, float), np.asarray(phi, float)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    eb, ep = np.exp(-1j * beta), np.exp(-1j * phi)
    r2 = 1.0 / np.sqrt(2.0)
    out = np.empty(alpha.shape + (3, 3), dtype=complex)
    out[..., 0, 0] = r2 * ca * eb
    out[..., 1, 0] = -r2
    out[..., 2, 0] = r2 * sa * ep
    out[..., 0, 1] = -sa * eb
    out[..., 1, 1] = 0.0
    out[..., 2, 1] = ca * ep
    out[..., 0, 2] = r2 * ca * eb
    out[..., 1, 2] = r2
    out[..., 2, 2] = r2 * sa * ep
    return out


@dataclass(frozen=True)
class SynthHamiltonian:
    theta0: np.ndarray
    gaps: tuple[float, float]

    @property
    def energies(self) -> np.ndarray:
        return np.array([0.0, self.gaps[0], self.gaps[1]])

    def frame(self, theta=None) -> np.ndarray:
        a, b, p = self.theta0 if theta is None else np.asarray(theta, float)
        return qutrit_frame(a, b, p)

    def matrix(self, theta=None) -> np.ndarray:
        fr = self.frame(theta)
        return (fr * self.energies) @ fr.conj().T

    def couplings(self) -> np.ndarray:
        """a[k, mu] = <psi_k(theta0)|d_mu psi0(theta0)> for k = 1, 2."""
        model = qutrit_model()
        fr = self.frame()
        tang = np.stack(
            [model.analytic_tangent(self.theta0, mu) for mu in range(3)], axis=1
        )
        return fr.conj().T[1:] @ tang


def build_hamiltonian(theta0, gaps=DEFAULT_GAPS, max_amplitude: float = DEFAULT_AMPLITUDE) -> SynthHamiltonian:
    """Spectral construction with E0 = 0 < gaps.

    Raises DegenerateGaps when the two transitions are closer than ten
    times the largest Rabi rate reachable with ``max_amplitude``.
    """
    theta0 = qutrit_model().check_domain(theta0).copy()
    d1, d2 = (float(x) for x in gaps)
    if d1 <= 0 or d2 <= 0:
        raise DomainError("gaps must be positive")
    h = SynthHamiltonian(theta0, (d1, d2))
    coup = np.abs(h.couplings())
    linewidth = max_amplitude * float(np.max(coup * np.array([[d1], [d2]]), initial=0.0))
    if abs(d1 - d2) < 10.0 * linewidth or d1 == d2:
        raise DegenerateGaps(f"gaps {d1:g}, {d2:g} too close for Rabi linewidth {linewidth:.3g}")
    return h


@dataclass(frozen=True)
class ModulationConfig:
    """theta_mu(t) = theta0_mu + m_mu sin(w t); the second axis uses cos(w t) out of phase."""

    axes: tuple[int, ...]
    amplitudes: tuple[float, ...]
    phase_mode: str
    omega: float
    duration: float
    dt: Optional[float] = None

    def __post_init__(self):
        axes = tuple(int(a) for a in self.axes)
        amps = tuple(float(m) for m in self.amplitudes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "amplitudes", amps)
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}")
        want = 1 if self.phase_mode == "single" else 2
        if len(axes) != want or len(amps) != want:
            raise ValueError(f"{self.phase_mode} modulation needs {want} axes and amplitudes")
        if len(set(axes)) != len(axes) or any(not 0 <= a < 3 for a in axes):
            raise ValueError(f"invalid modulation axes {axes}")
        if any(abs(m) > MAX_AMPLITUDE for m in amps):
            raise ValueError(f"modulation amplitudes must satisfy |m| <= {MAX_AMPLITUDE}")
        if self.omega <= 0 or self.duration <= 0:
            raise ValueError("omega and duration must be positive")

    def check_resonance(self, gaps) -> None:
        if not any(abs(self.omega - g) <= 0.2 * g for g in gaps):
            raise ValueError(f"drive frequency {self.omega:g} is not within 20% of a gap {tuple(gaps)}")

    def path(self, theta0, t) -> np.ndarray:
        """theta(t) with shape t.shape + (3,)."""
        t = np.asarray(t, float)
        out = np.broadcast_to(np.asarray(theta0, float), t.shape + (3,)).copy()
        wave = np.sin(self.omega * t)
        out[..., self.axes[0]] += self.amplitudes[0] * wave
        if len(self.axes) == 2:
            second = wave if self.phase_mode == "in-phase" else np.cos(self.omega * t)
            out[..., self.axes[1]] += self.amplitudes[1] * second
        return out


@dataclass
class RabiTrace:
    times: np.ndarray
    populations: np.ndarray  # (n_times, 3) in the eigenframe at theta0
    norm_drift: float
    config: ModulationConfig
    fitted_rabi: Optional[float] = None
    fit_residual: Optional[float] = None
    fit_ok: Optional[bool] = None


def default_dt(gaps, omega: float, steps_per_period: int = STEPS_PER_PERIOD) -> float:
    return 2 * math.pi / (steps_per_period * max(max(gaps), omega))


def _step_matrices(h: SynthHamiltonian, mod: ModulationConfig, dt: float, n0: int, n1: int) -> np.ndarray:
    """RK4 propagators for steps n0..n1-1 of the interaction-frame equation.

    In the frame of H(theta0) the coefficients c obey dc/dt = A(t) c with
    A = -i e^{iEt} (B^dag H(theta(t)) B - E) e^{-iEt}; RK4 applied to a
    linear system is a fixed 3x3 matrix per step, so all steps of a chunk
    are built at once.
    """
    e = h.energies
    tau = (np.arange(2 * n0, 2 * n1 + 1)) * (dt / 2)
    th = mod.path(h.theta0, tau)
    x = h.frame().conj().T @ qutrit_frame(th[:, 0], th[:, 1], th[:, 2])
    v = (x * e) @ np.conj(np.swapaxes(x, -1, -2)) - np.diag(e)
    phase = np.exp(1j * (e[:, None] - e[None, :]) * tau[:, None, None])
    a = -1j * phase * v
    a1, a2, a3 = a[0:-1:2], a[1::2], a[2::2]
    eye = np.eye(3)
    k2 = a2 @ (eye + 0.5 * dt * a1)
    k3 = a2 @ (eye + 0.5 * dt * k2)
    k4 = a3 @ (eye + dt * k3)
    return eye + (dt / 6.0) * (a1 + 2 * k2 + 2 * k3 + k4)


def evolve(h: SynthHamiltonian, mod: ModulationConfig, psi_init=None, chunk: int = 20000) -> RabiTrace:
    """Integrate i dpsi/dt = H(theta(t)) psi with fixed-step RK4.

    Integration runs in the interaction frame of H(theta0), which leaves
    the populations unchanged and keeps the RK4 norm error tied to the
    weak modulation instead of the bare gaps. The norm is audited, never
    renormalized.
    """
    mod.check_resonance(h.gaps)
    dt_max = 2 * math.pi / (50 * max(max(h.gaps), mod.omega))
    dt = mod.dt if mod.dt is not None else default_dt(h.gaps, mod.omega)
    if dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the stability bound {dt_max:g}")
    n_steps = int(math.ceil(mod.duration / dt - 1e-9))
    if n_steps > MAX_STEPS:
        raise ValueError(f"{n_steps} steps exceed the cap of {MAX_STEPS}")

    fr = h.frame()
    if psi_init is None:
        c = np.array([1.0, 0.0, 0.0], dtype=complex)
    else:
        c = fr.conj().T @ np.asarray(psi_init, dtype=complex)
    coeffs = np.empty((n_steps + 1, 3), dtype=complex)
    coeffs[0] = c
    for n0 in range(0, n_steps, chunk):
        n1 = min(n0 + chunk, n_steps)
        for i, m in enumerate(_step_matrices(h, mod, dt, n0, n1), start=n0 + 1):
            c = m @ c
            coeffs[i] = c
    pops = np.abs(coeffs) ** 2
    drift = float(np.max(np.abs(np.sqrt(pops.sum(axis=1)) - 1.0)))
    if drift > NORM_DRIFT_LIMIT:
        raise StepTooLarge(f"norm drift {drift:.2e} exceeds {NORM_DRIFT_LIMIT:g}; reduce dt")
    times = np.arange(n_steps + 1) * dt
    return RabiTrace(times, pops, drift, mod)


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitConfig:
    max_residual: float = 0.05  # RMS of the fit
    min_contrast: float = 0.8  # a resonant two-level transfer reaches ~1
    min_periods: float = 2.0
    dark_population: float = 0.05
    coupling_floor: float = 0.05  # |<psi_k|d psi0>| below this is treated as dark
    n_periods: float = 3.0
    systematic: float = 0.01  # model-error floor added to statistical uncertainties


class RabiFit(NamedTuple):
    omega: float
    uncertainty: float
    amplitude: float
    offset: float
    residual: float


def _rabi_curve(t, amp, omega, offset):
    return amp * np.sin(0.5 * omega * t) ** 2 + offset


def _spectral_guess(t, p) -> float:
    y = p - p.mean()
    n = len(y)
    nfft = 1 << int(math.ceil(math.log2(8 * n)))
    spec = np.abs(np.fft.rfft(y, nfft))
    freqs = 2 * math.pi * np.fft.rfftfreq(nfft, d=t[1] - t[0])
    spec[0] = 0.0
    return float(freqs[int(np.argmax(spec))])


def fit_rabi_curve(times, population, config: FitConfig = FitConfig()) -> RabiFit:
    """Least-squares fit of A sin^2(Omega t / 2) + c.

    Raises FitFailed for flat traces, poor fits, low contrast (detuned
    drive), or traces shorter than ``config.min_periods`` Rabi periods.
    """
    t = np.asarray(times, float)
    p = np.asarray(population, float)
    if len(t) < 8:
        raise FitFailed("trace too short")
    if np.ptp(p) < 1e-6:
        raise FitFailed("constant trace")
    w0 = _spectral_guess(t, p)
    if w0 <= 0:
        raise FitFailed("no oscillation found in the spectrum")
    p0 = (float(np.ptp(p)), w0, float(p.min()))
    try:
        popt, pcov = curve_fit(_rabi_curve, t, p, p0=p0, maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitFailed(f"least squares did not converge: {exc}") from None
    amp, omega, offset = popt
    if omega < 0:
        omega = -omega
    resid = float(np.sqrt(np.mean((_rabi_curve(t, *popt) - p) ** 2)))
    unc = float(np.sqrt(abs(pcov[1, 1]))) if np.all(np.isfinite(pcov)) else float("inf")
    fit = RabiFit(float(omega), unc, float(amp), float(offset), resid)
    if resid > config.max_residual:
        raise FitFailed(f"fit residual {resid:.3g} above {config.max_residual:g}")
    if amp < config.min_contrast:
        raise FitFailed(f"oscillation contrast {amp:.3g} below {config.min_contrast:g} (off resonance?)")
    if omega * (t[-1] - t[0]) / (2 * math.pi) < config.min_periods:
        raise FitFailed("trace covers fewer than the required number of Rabi periods")
    return fit


def fit_rabi(trace: RabiTrace, target_level: int, config: FitConfig = FitConfig()) -> tuple[float, float]:
    """Fitted Rabi rate into level 1 or 2 and its standard error; updates ``trace``."""
    if target_level not in (1, 2):
        raise ValueError("target_level must be 1 or 2")
    try:
        fit = fit_rabi_curve(trace.times, trace.populations[:, target_level], config)
    except FitFailed:
        trace.fit_ok = False
        raise
    trace.fitted_rabi = fit.omega
    trace.fit_residual = fit.residual
    trace.fit_ok = True
    return fit.omega, fit.uncertainty


# ---------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True)
class RunRecord:
    axes: tuple[int, ...]
    phase_mode: str
    level: int
    omega: float
    duration: float
    fitted_rabi: float
    uncertainty: float
    dark: bool


@dataclass(frozen=True)
class Reconstruction:
    theta0: np.ndarray
    gaps: tuple[float, float]
    amplitude: float
    g: np.ndarray
    f: np.ndarray
    g_uncertainty: np.ndarray
    f_uncertainty: np.ndarray
    runs: list = field(default_factory=list)
    antisymmetry_residual: np.ndarray = None


def _direction(phase_mode: str) -> tuple[complex, ...]:
    # weight of each axis in the resonant (e^{-i w t}) component of the drive
    return {"single": (1.0,), "in-phase": (1.0, 1.0), "out-of-phase": (1j, 1.0)}[phase_mode]


def _run_plan():
    plan = []
    for mu in range(3):
        plan.append(((mu,), "single"))
    for mu in range(3):
        for nu in range(mu + 1, 3):
            plan.append(((mu, nu), "in-phase"))
            plan.append(((mu, nu), "out-of-phase"))
            plan.append(((nu, mu), "out-of-phase"))
    return plan


def _measure(h, axes, mode, level, amplitude, config, steps_per_period, rng, noise) -> RunRecord:
    gap = h.gaps[level - 1]
    coup = h.couplings()[level - 1]
    eff = abs(sum(c * coup[ax] for c, ax in zip(_direction(mode), axes)))
    expect_dark = eff < config.coupling_floor
    dt = default_dt(h.gaps, gap, steps_per_period)
    rate = amplitude * gap * max(eff, config.coupling_floor)
    if rate > 0:
        duration = min(config.n_periods * 2 * math.pi / rate, MAX_STEPS * dt)
    else:
        duration = MAX_STEPS * dt
    mod = ModulationConfig(axes, (amplitude,) * len(axes), mode, gap, duration, dt)
    trace = evolve(h, mod)
    pop = trace.populations[:, level]
    if noise > 0:
        pop = pop + rng.normal(0.0, noise, size=pop.shape)
    if expect_dark and np.max(pop) < config.dark_population + 3 * noise:
        # no visible transfer: rate bounded by the largest population reached
        bound = 2 * math.asin(math.sqrt(min(1.0, max(float(np.max(pop)), 0.0)))) / trace.times[-1]
        return RunRecord(axes, mode, level, gap, duration, 0.0, bound, True)
    try:
        fit = fit_rabi_curve(trace.times, pop, config)
    except FitFailed as exc:
        labels = qutrit_model().axis_labels
        raise FitFailed(
            f"run {mode} axes={tuple(labels[a] for a in axes)} level={level}: {exc}"
        ) from None
    return RunRecord(axes, mode, level, gap, duration, fit.omega, fit.uncertainty, False)


def reconstruct_qgt(
    theta0,
    gaps=DEFAULT_GAPS,
    amplitude: float = DEFAULT_AMPLITUDE,
    config: FitConfig = FitConfig(),
    steps_per_period: int = STEPS_PER_PERIOD,
    noise: float = 0.0,
    seed: Optional[int] = None,
) -> Reconstruction:
    """Metric and Berry curvature at ``theta0`` from simulated Rabi rates.

    Each axis, in-phase pair and ordered out-of-phase pair is driven at
    both transitions. F is taken from the two orderings of every
    out-of-phase pair, whose disagreement is checked against the
    propagated uncertainty.
    """
    h = build_hamiltonian(theta0, gaps, max_amplitude=max(abs(amplitude), 1e-12))
    rng = np.random.default_rng(seed)
    runs = []
    s_val = {}
    s_var = {}
    for axes, mode in _run_plan():
        total, var = 0.0, 0.0
        for level in (1, 2):
            rec = _measure(h, axes, mode, level, amplitude, config, steps_per_period, rng, noise)
            runs.append(rec)
            scale = amplitude * h.gaps[level - 1]
            x = rec.fitted_rabi / scale
            sx = rec.uncertainty / scale
            total += x * x
            var += sx**4 if rec.dark else (2 * x * sx) ** 2
        s_val[axes, mode] = total
        s_var[axes, mode] = var

    g = np.zeros((3, 3))
    g_var = np.zeros((3, 3))
    for mu in range(3):
        g[mu, mu] = s_val[(mu,), "single"]
        g_var[mu, mu] = s_var[(mu,), "single"]
    f = np.zeros((3, 3))
    f_var = np.zeros((3, 3))
    asym = np.zeros((3, 3))
    for mu in range(3):
        for nu in range(mu + 1, 3):
            key = (mu, nu)
            g[mu, nu] = g[nu, mu] = 0.5 * (s_val[key, "in-phase"] - g[mu, mu] - g[nu, nu])
            g_var[mu, nu] = g_var[nu, mu] = 0.25 * (s_var[key, "in-phase"] + g_var[mu, mu] + g_var[nu, nu])
            s_fw = s_val[(mu, nu), "out-of-phase"]
            s_bw = s_val[(nu, mu), "out-of-phase"]
            # S(mu,nu) = g_mm + g_nn + sign F_mn and S(nu,mu) = g_mm + g_nn - sign F_mn
            f_mn = OUT_OF_PHASE_SIGN * 0.5 * (s_fw - s_bw)
            f[mu, nu], f[nu, mu] = f_mn, -f_mn
            var_pair = s_var[(mu, nu), "out-of-phase"] + s_var[(nu, mu), "out-of-phase"]
            f_var[mu, nu] = f_var[nu, mu] = 0.25 * var_pair
            # each ordering alone also determines F; their sum must vanish
            resid = s_fw + s_bw - 2 * (g[mu, mu] + g[nu, nu])
            asym[mu, nu] = asym[nu, mu] = resid
            sigma = math.sqrt(var_pair + 4 * (g_var[mu, mu] + g_var[nu, nu]) + config.systematic**2)
            if abs(resid) > 5 * sigma:
                raise InconsistentReconstruction(
                    f"out-of-phase orderings disagree for axes ({mu}, {nu}): residual {resid:.3g}, sigma {sigma:.3g}"
                )
    return Reconstruction(
        theta0=h.theta0,
        gaps=h.gaps,
        amplitude=amplitude,
        g=g,
        f=f,
        g_uncertainty=np.sqrt(g_var),
        f_uncertainty=np.sqrt(f_var),
        runs=runs,
        antisymmetry_residual=asym,
    )


def direct_qgt(theta0) -> tuple[np.ndarray, np.ndarray]:
    """(g, F) of the qutrit model from the analytic tangent; the oracle for reconstructions."""
    return split(qgt(qutrit_model(), theta0, "analytic"))


def reconstruction_to_dict(rec: Reconstruction) -> dict:
    labels = qutrit_model().axis_labels
    return {
        "theta0": [float(x) for x in rec.theta0],
        "gaps": [float(x) for x in rec.gaps],
        "amplitudes": float(rec.amplitude),
        "runs": [
            {
                "axes": [labels[a] for a in r.axes],
                "phase_mode": r.phase_mode,
                "level": r.level,
                "omega": r.omega,
                "fitted_rabi": r.fitted_rabi,
                "uncertainty": r.uncertainty,
                "dark": r.dark,
            }
            for r in rec.runs
        ],
        "g": rec.g.tolist(),
        "F": rec.f.tolist(),
        "uncertainties": {"g": rec.g_uncertainty.tolist(), "F": rec.f_uncertainty.tolist()},
    }
