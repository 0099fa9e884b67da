"""Annealing Hamiltonian family and the three-phase reverse-anneal schedule.

The register Hamiltonian interpolates between a transverse-field driver and
a diagonal Ising problem term plus a longitudinal field,

    H(k) = (1 - k) * H_D + k * (k * H_L + H_P),

with k in [0, 1]. Energies are dimensionless (hbar = 1) and times are in
microseconds, so a dimensionless energy E corresponds to an angular
frequency of E rad/us. An optional energy_scale multiplies every term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import DegeneracyError, OperatorError, SpinConfiguration, pauli

DEFAULT_RAMP_US = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the register: size N, Ising J, longitudinal h, transverse Gamma."""

    n_qubits: int
    coupling: float = 1.0
    longitudinal: float = 1.0
    transverse: float = 1.0
    energy_scale: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise OperatorError("n_qubits must be >= 1")
        if self.energy_scale <= 0:
            raise OperatorError("energy_scale must be positive")

    @classmethod
    def fully_connected(cls, **overrides) -> "ModelParams":
        """Four qubits, all-to-all ferromagnetic coupling J=1, h=1, Gamma=1."""
        kwargs = dict(n_qubits=4, coupling=1.0, longitudinal=1.0, transverse=1.0)
        kwargs.update(overrides)
        return cls(**kwargs)

    @classmethod
    def single_qubit(cls, **overrides) -> "ModelParams":
        """One qubit, J=0, h=1, Gamma=1."""
        kwargs = dict(n_qubits=1, coupling=0.0, longitudinal=1.0, transverse=1.0)
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@dataclass(frozen=True)
class RqaSchedule:
    """Piecewise-linear reverse-anneal path: 1 -> h_d, hold, h_d -> 1.

    t1 and t3 are the ramp durations, t2 the hold duration (all in us);
    h_d in (0, 1] is the annealing parameter during the hold.
    """

    t1: float = DEFAULT_RAMP_US
    t2: float = 0.0
    t3: float = DEFAULT_RAMP_US
    h_d: float = 0.5

    def __post_init__(self):
        if self.t1 <= 0 or self.t3 <= 0:
            raise OperatorError("ramp durations t1 and t3 must be positive")
        if self.t2 < 0:
            raise OperatorError("hold duration t2 must be nonnegative")
        if not 0 < self.h_d <= 1:
            raise OperatorError(f"h_d={self.h_d} outside (0, 1]")

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3

    def with_hold(self, t2: float) -> "RqaSchedule":
        return RqaSchedule(t1=self.t1, t2=t2, t3=self.t3, h_d=self.h_d)


@dataclass(frozen=True)
class SchedulePoint:
    t: float
    k: float

    def __post_init__(self):
        if not 0 <= self.k <= 1:
            raise OperatorError(f"annealing parameter k={self.k} outside [0, 1]")


def problem_hamiltonian(params: ModelParams) -> np.ndarray:
    """Diagonal Ising term -J * sum_{j<k} sz_j sz_k (each unordered pair once)."""
    n = params.n_qubits
    dim = params.dim
    h_p = np.zeros((dim, dim), dtype=complex)
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            h_p -= params.coupling * (pauli("z", j, n) @ pauli("z", k, n))
    return params.energy_scale * h_p


def longitudinal_hamiltonian(params: ModelParams) -> np.ndarray:
    """Uniform longitudinal field (h/2) * sum_j sz_j."""
    n = params.n_qubits
    h_l = sum(pauli("z", j, n) for j in range(1, n + 1))
    return params.energy_scale * (params.longitudinal / 2.0) * h_l


def driver_hamiltonian(params: ModelParams) -> np.ndarray:
    """Transverse-field driver -Gamma * sum_j sx_j."""
    n = params.n_qubits
    h_d = sum(pauli("x", j, n) for j in range(1, n + 1))
    return params.energy_scale * (-params.transverse) * h_d


def total_hamiltonian(k: float, params: ModelParams) -> np.ndarray:
    """H(k) = (1-k) H_D + k (k H_L + H_P) for k in [0, 1]."""
    if not 0 <= k <= 1:
        raise OperatorError(f"annealing parameter k={k} outside [0, 1]")
    return (
        (1.0 - k) * driver_hamiltonian(params)
        + k * (k * longitudinal_hamiltonian(params) + problem_hamiltonian(params))
    )


class HamiltonianCache:
    """Precomputed H_P, H_L, H_D so schedule evaluation is three scalars deep."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.h_p = problem_hamiltonian(params)
        self.h_l = longitudinal_hamiltonian(params)
        self.h_d = driver_hamiltonian(params)

    def at(self, k: float) -> np.ndarray:
        if not 0 <= k <= 1:
            raise OperatorError(f"annealing parameter k={k} outside [0, 1]")
        return (1.0 - k) * self.h_d + k * k * self.h_l + k * self.h_p


def schedule_k(t: float, schedule: RqaSchedule) -> float:
    """Annealing parameter at time t along the reverse-anneal path.

    Piecewise linear and continuous: k(0) = 1, k(t1) = h_d, constant during
    the hold, back to k = 1 at the end. Times outside [0, total] are
    rejected.
    """
    if t < 0 or t > schedule.total + 1e-12:
        raise OperatorError(f"t={t} outside schedule [0, {schedule.total}]")
    if t <= schedule.t1:
        return 1.0 + (schedule.h_d - 1.0) * (t / schedule.t1)
    if t <= schedule.t1 + schedule.t2:
        return schedule.h_d
    frac = (t - schedule.t1 - schedule.t2) / schedule.t3
    return schedule.h_d + (1.0 - schedule.h_d) * min(frac, 1.0)


def schedule_vertices(schedule: RqaSchedule) -> list[SchedulePoint]:
    """The corner points of the piecewise-linear path (hold collapsed if t2=0)."""
    pts = [SchedulePoint(0.0, 1.0), SchedulePoint(schedule.t1, schedule.h_d)]
    if schedule.t2 > 0:
        pts.append(SchedulePoint(schedule.t1 + schedule.t2, schedule.h_d))
    pts.append(SchedulePoint(schedule.total, 1.0))
    return pts


def initial_excited_configuration(params: ModelParams) -> SpinConfiguration:
    """The computational-basis first excited state of H_P + H_L.

    Valid only when that level is unique and classical (a basis state), as
    in the fully connected preset (all-up) and the single-qubit preset (up).
    Degenerate excited manifolds raise DegeneracyError so the caller must
    choose explicitly.
    """
    h_classical = problem_hamiltonian(params) + longitudinal_hamiltonian(params)
    diag = np.real(np.diag(h_classical))
    order = np.argsort(diag, kind="stable")
    ground = diag[order[0]]
    if np.count_nonzero(np.abs(diag - ground) < 1e-9) > 1:
        raise DegeneracyError("ground level of the classical Hamiltonian is degenerate")
    above = [i for i in order if diag[i] > ground + 1e-9]
    if not above:
        raise DegeneracyError("no level above the ground manifold")
    first = diag[above[0]]
    members = [i for i in above if abs(diag[i] - first) < 1e-9]
    if len(members) > 1:
        raise DegeneracyError(
            f"first excited level is {len(members)}-fold degenerate; "
            "specify the initial configuration explicitly"
        )
    return SpinConfiguration.from_index(members[0], params.n_qubits)


def operator_norm_bound(params: ModelParams) -> float:
    """Triangle-inequality bound on max_k ||H(k)||.

    Gamma*N + |J|*N(N-1)/2 + |h|*N/2, times the energy scale. Used to pick
    integrator step sizes.
    """
    n = params.n_qubits
    return params.energy_scale * (
        abs(params.transverse) * n
        + abs(params.coupling) * n * (n - 1) / 2.0
        + abs(params.longitudinal) * n / 2.0
    )
