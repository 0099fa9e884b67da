"""Time evolution of closed and open registers along the anneal path.

Closed states follow the Schrodinger equation under fixed-step RK4 with the
Hamiltonian evaluated at every substage. Open states follow a Lindblad
master equation; in eigenbasis mode the jump operators
|phi_m><phi_n| * sqrt(rates[n, m]) are rebuilt from the instantaneous
eigensystem once per step (the Hamiltonian commutator still tracks k
exactly within the step), which keeps the dissipator application at O(d^2).

Hold phases have a time-independent generator, so instead of stepping
through them the protocol runner propagates the exact solution: level
populations follow exp(classical-rate-matrix * t) and each eigenbasis
coherence decays as exp(-(i*omega + (out_a + out_b)/2) * t). That makes
hold durations of 1e6 us as cheap as short ones.

Fixed-step RK4 was chosen over adaptive stepping deliberately: the Hilbert
spaces are tiny, protocols are short, and bit-reproducibility across runs
matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import (
    HamiltonianCache,
    ModelParams,
    RqaSchedule,
    operator_norm_bound,
    schedule_k,
)
from .noise import NoiseSpec, davies_rate_matrix, lab_frame_dissipators
from .operators import OperatorError, check_state, eigensystem

__all__ = [
    "EvolutionConfig",
    "Trajectory",
    "IntegrationError",
    "evolve_closed",
    "evolve_lindblad",
    "evolve_static",
    "ProtocolRunner",
    "operator_norm_bound",
]

TRACE_TOL_PER_US = 1e-6
POSITIVITY_ABORT = 1e-6
NORM_TOL = 1e-6
DEFAULT_DT_TARGET = 0.05
POSITIVITY_CHECK_EVERY = 50


class IntegrationError(RuntimeError):
    """Raised when an integration violates its conservation tolerances."""


@dataclass(frozen=True)
class EvolutionConfig:
    """Fixed-step integrator settings.

    dt defaults to DEFAULT_DT_TARGET / operator_norm_bound so that
    ||H|| * dt <= 0.05; record_stride controls how many intermediate states
    a Trajectory keeps (the final state is always recorded).
    """

    dt: float
    method: str = "rk4"
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise OperatorError("dt must be positive")
        if self.method != "rk4":
            raise OperatorError(f"unknown integration method {self.method!r}")
        if self.record_stride < 1:
            raise OperatorError("record_stride must be >= 1")

    @classmethod
    def for_params(cls, params: ModelParams, target: float = DEFAULT_DT_TARGET,
                   record_stride: int = 1) -> "EvolutionConfig":
        bound = operator_norm_bound(params)
        dt = target / bound if bound > 0 else target
        return cls(dt=dt, record_stride=record_stride)


@dataclass(frozen=True)
class Trajectory:
    """Recorded (time, state) pairs; states are vectors or density matrices."""

    times: np.ndarray
    states: list[np.ndarray]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _segment_steps(duration: float, dt: float) -> tuple[int, float]:
    n = max(1, int(np.ceil(duration / dt - 1e-12)))
    return n, duration / n


def evolve_closed(psi0: np.ndarray, schedule: RqaSchedule, params: ModelParams,
                  cfg: EvolutionConfig | None = None) -> Trajectory:
    """Integrate d|psi>/dt = -i H(k(t)) |psi> over the full schedule."""
    psi = check_state(psi0).astype(complex)
    cfg = cfg or EvolutionConfig.for_params(params)
    cache = HamiltonianCache(params)
    n_steps, dt = _segment_steps(schedule.total, cfg.dt)

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        return -1j * (cache.at(schedule_k(t, schedule)) @ state)

    times = [0.0]
    states = [psi.copy()]
    t = 0.0
    for step in range(n_steps):
        k1 = rhs(t, psi)
        k2 = rhs(t + dt / 2, psi + (dt / 2) * k1)
        k3 = rhs(t + dt / 2, psi + (dt / 2) * k2)
        k4 = rhs(t + dt, psi + dt * k3)
        psi = psi + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (step + 1) * dt
        if (step + 1) % cfg.record_stride == 0 or step == n_steps - 1:
            times.append(t)
            states.append(psi.copy())
    drift = abs(np.vdot(psi, psi).real - 1.0)
    if drift > NORM_TOL * max(1.0, schedule.total):
        raise IntegrationError(f"norm drift {drift:.3e} exceeds tolerance; shrink dt")
    return Trajectory(times=np.asarray(times), states=states)


class _DissipatorContext:
    """Per-step frozen dissipator. Applying it costs O(d^2) in eigenbasis mode.

    Eigenbasis ingredients are memoized by the annealing parameter k, since
    sweeping hold durations replays the same ramp k-sequence many times.
    """

    _MEMO_LIMIT = 20_000

    def __init__(self, noise: NoiseSpec, params: ModelParams):
        self.noise = noise
        self.params = params
        self.collapse = None
        self.collapse_sq = None
        if noise.mode == "lab_frame" and noise.rate > 0:
            self.collapse = lab_frame_dissipators(params, noise)
            self.collapse_sq = sum(c.conj().T @ c for c in self.collapse)
        self.basis = None
        self.feed = None      # feed[m, n]: rate n -> m
        self.damping = None   # damping[a, b] = (out_a + out_b) / 2
        self._memo: dict[float, tuple] = {}

    def refresh(self, k: float, cache: HamiltonianCache) -> None:
        if self.noise.mode != "eigenbasis_davies" or self.noise.rate == 0:
            return
        entry = self._memo.get(k)
        if entry is None:
            sys = eigensystem(cache.at(k))
            rm = davies_rate_matrix(sys, self.noise, self.params.n_qubits)
            out = rm.outflow()
            entry = (sys.states, rm.rates.T, 0.5 * (out[:, None] + out[None, :]))
            if len(self._memo) >= self._MEMO_LIMIT:
                self._memo.clear()
            self._memo[k] = entry
        self.basis, self.feed, self.damping = entry

    def apply(self, rho: np.ndarray) -> np.ndarray:
        if self.noise.rate == 0 or self.noise.mode == "none":
            return np.zeros_like(rho)
        if self.noise.mode == "lab_frame":
            acc = np.zeros_like(rho)
            for c in self.collapse:
                acc += c @ rho @ c.conj().T
            acc -= 0.5 * (self.collapse_sq @ rho + rho @ self.collapse_sq)
            return acc
        v = self.basis
        rho_e = v.conj().T @ rho @ v
        diss = -self.damping * rho_e
        diss[np.diag_indices_from(diss)] += self.feed @ np.real(np.diag(rho_e))
        return v @ diss @ v.conj().T


def _check_density(rho: np.ndarray, t: float, elapsed: float, check_positivity: bool) -> None:
    tr_dev = abs(np.trace(rho).real - 1.0)
    if tr_dev > TRACE_TOL_PER_US * max(1.0, elapsed):
        raise IntegrationError(f"trace drift {tr_dev:.3e} at t={t:.4f} us")
    herm_dev = np.max(np.abs(rho - rho.conj().T))
    if herm_dev > 1e-8:
        raise IntegrationError(f"hermiticity drift {herm_dev:.3e} at t={t:.4f} us")
    if check_positivity:
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -POSITIVITY_ABORT:
            raise IntegrationError(
                f"negative eigenvalue {min_eig:.3e} at t={t:.4f} us; "
                "state left the physical cone"
            )


def _integrate_lindblad_segment(
    rho: np.ndarray,
    k_of_s: callable,
    duration: float,
    cache: HamiltonianCache,
    ctx: _DissipatorContext,
    cfg: EvolutionConfig,
    t_offset: float = 0.0,
    record: list | None = None,
) -> np.ndarray:
    if duration <= 0:
        return rho
    n_steps, dt = _segment_steps(duration, cfg.dt)

    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        h = cache.at(k_of_s(s))
        return -1j * (h @ state - state @ h) + ctx.apply(state)

    s = 0.0
    for step in range(n_steps):
        ctx.refresh(k_of_s(s), cache)
        k1 = rhs(s, rho)
        k2 = rhs(s + dt / 2, rho + (dt / 2) * k1)
        k3 = rhs(s + dt / 2, rho + (dt / 2) * k2)
        k4 = rhs(s + dt, rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        s = (step + 1) * dt
        check_pos = (step + 1) % POSITIVITY_CHECK_EVERY == 0 or step == n_steps - 1
        _check_density(rho, t_offset + s, t_offset + s, check_pos)
        if record is not None and ((step + 1) % cfg.record_stride == 0 or step == n_steps - 1):
            record.append((t_offset + s, rho.copy()))
    return rho


def evolve_lindblad(
    rho0: np.ndarray,
    schedule: RqaSchedule,
    params: ModelParams,
    noise: NoiseSpec,
    cfg: EvolutionConfig | None = None,
) -> Trajectory:
    """Integrate the master equation over the full schedule, step by step.

    Suitable for short holds and cross-validation; long holds should go
    through ProtocolRunner, which replaces the hold segment by the exact
    static-generator solution.
    """
    rho = np.asarray(rho0, dtype=complex).copy()
    _check_density(rho, 0.0, 0.0, True)
    cfg = cfg or EvolutionConfig.for_params(params)
    cache = HamiltonianCache(params)
    ctx = _DissipatorContext(noise, params)
    record: list = [(0.0, rho.copy())]
    rho = _integrate_lindblad_segment(
        rho, lambda s: schedule_k(s, schedule), schedule.total, cache, ctx, cfg,
        t_offset=0.0, record=record,
    )
    times = np.asarray([t for t, _ in record])
    states = [state for _, state in record]
    return Trajectory(times=times, states=states)


def evolve_static(
    rho0: np.ndarray,
    k: float,
    duration: float,
    params: ModelParams,
    noise: NoiseSpec,
) -> np.ndarray:
    """Exact propagation under the time-independent generator at fixed k.

    Eigenbasis mode solves populations through the classical master
    equation exp(M t) and coherences through closed-form decay factors;
    lab-frame mode exponentiates the full Liouvillian; without noise the
    evolution is the exact unitary.
    """
    rho = np.asarray(rho0, dtype=complex)
    if duration == 0:
        return rho.copy()
    h = HamiltonianCache(params).at(k)
    sys = eigensystem(h)
    v = sys.states
    if noise.mode == "eigenbasis_davies" and noise.rate > 0:
        rm = davies_rate_matrix(sys, noise, params.n_qubits)
        out = rm.outflow()
        rho_e = v.conj().T @ rho @ v
        populations = expm(rm.classical_generator() * duration) @ np.real(np.diag(rho_e))
        omega = sys.energies[:, None] - sys.energies[None, :]
        damping = 0.5 * (out[:, None] + out[None, :])
        decay = np.exp((-1j * omega - damping) * duration)
        rho_t = rho_e * decay
        rho_t[np.diag_indices_from(rho_t)] = populations
        return v @ rho_t @ v.conj().T
    if noise.mode == "lab_frame" and noise.rate > 0:
        dim = rho.shape[0]
        eye = np.eye(dim)
        liouville = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        for c in lab_frame_dissipators(params, noise):
            csq = c.conj().T @ c
            liouville += (
                np.kron(c, c.conj())
                - 0.5 * np.kron(csq, eye)
                - 0.5 * np.kron(eye, csq.T)
            )
        flat = expm(liouville * duration) @ rho.reshape(-1)
        return flat.reshape(dim, dim)
    phases = np.exp(-1j * sys.energies * duration)
    u = (v * phases) @ v.conj().T
    return u @ rho @ u.conj().T


class ProtocolRunner:
    """Reverse-anneal protocol engine reusable across hold durations.

    The entry ramp is integrated once and cached; each run() then applies
    the exact hold solution for its t2 followed by the exit ramp. All
    phases share one dissipator convention, so run(t2) agrees with a full
    step-integration of the same schedule up to integrator tolerance.
    """

    def __init__(
        self,
        params: ModelParams,
        schedule: RqaSchedule,
        noise: NoiseSpec,
        cfg: EvolutionConfig | None = None,
        fast_hold: bool = True,
    ):
        self.params = params
        self.schedule = schedule
        self.noise = noise
        self.cfg = cfg or EvolutionConfig.for_params(params)
        self.fast_hold = fast_hold
        self._cache = HamiltonianCache(params)
        self._ctx = _DissipatorContext(noise, params)
        self._hold_input: np.ndarray | None = None
        self._rho0: np.ndarray | None = None

    def _ramp_in(self, rho0: np.ndarray) -> np.ndarray:
        if self._hold_input is not None and self._rho0 is not None and np.array_equal(self._rho0, rho0):
            return self._hold_input
        t1, hd = self.schedule.t1, self.schedule.h_d
        rho = _integrate_lindblad_segment(
            np.asarray(rho0, dtype=complex).copy(),
            lambda s: 1.0 + (hd - 1.0) * (s / t1),
            t1, self._cache, self._ctx, self.cfg,
        )
        self._rho0 = np.asarray(rho0, dtype=complex).copy()
        self._hold_input = rho
        return rho

    def run(self, rho0: np.ndarray, t2: float) -> np.ndarray:
        """Final density matrix after ramp-in, a hold of t2 us, and ramp-out."""
        if t2 < 0:
            raise OperatorError("hold duration must be nonnegative")
        rho = self._ramp_in(rho0).copy()
        if t2 > 0:
            if self.fast_hold:
                rho = evolve_static(rho, self.schedule.h_d, t2, self.params, self.noise)
            else:
                rho = _integrate_lindblad_segment(
                    rho, lambda s: self.schedule.h_d, t2, self._cache, self._ctx,
                    self.cfg, t_offset=self.schedule.t1,
                )
        t3, hd = self.schedule.t3, self.schedule.h_d
        rho = _integrate_lindblad_segment(
            rho, lambda s: hd + (1.0 - hd) * (s / t3), t3, self._cache, self._ctx, self.cfg,
        )
        _check_density(rho, self.schedule.total + t2, max(1.0, t2), True)
        return rho
