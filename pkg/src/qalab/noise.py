"""Noise models for the register dynamics.

Two simulable generators:

* lab_frame: white noise through fixed local operators, collapse operators
  sqrt(gamma) * sigma_j^axis on every qubit.
* eigenbasis_davies: weak-coupling relaxation between instantaneous energy
  eigenstates. Jump operators connect eigenlevels n -> m at rate
  gamma * sum_j |<m| sigma_j^axis |n>|^2 * S(E_n - E_m), where S is a
  spectral density with a flat part, an Ohmic part, and an optional
  Lorentzian two-level-system peak.

At temperature zero only downward transitions act; with temperature > 0 the
negative-frequency branch follows detailed balance S(-w) = exp(-w/theta) S(w).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams
from .operators import EigenSystem, OperatorError, pauli

DEFAULT_TLS_CENTER = 0.75
DEFAULT_TLS_WIDTH = 0.005
DEFAULT_TLS_AMPLITUDE = 7.0
FREQ_TOL = 1e-9


@dataclass(frozen=True)
class SpectralDensity:
    """Noise power S(omega) >= 0, in rate units per coupling strength.

    S(w) = flat + max(0, ohmic*w) + tls_amplitude * tls_width^2 /
    ((w - tls_center)^2 + tls_width^2) for w > 0. The flat term lets tests
    express an exactly constant density. For w < 0 detailed balance applies
    at temperature > 0; at temperature zero the upward branch vanishes.
    """

    ohmic: float = 0.0
    flat: float = 0.0
    tls_amplitude: float = 0.0
    tls_center: float = DEFAULT_TLS_CENTER
    tls_width: float = DEFAULT_TLS_WIDTH
    temperature: float = 0.0

    def __post_init__(self):
        if self.ohmic < 0 or self.flat < 0 or self.tls_amplitude < 0:
            raise OperatorError("spectral density strengths must be nonnegative")
        if self.tls_width <= 0:
            raise OperatorError("tls width must be positive")
        if self.temperature < 0:
            raise OperatorError("temperature must be nonnegative")

    @classmethod
    def constant(cls, value: float = 1.0) -> "SpectralDensity":
        return cls(flat=value)

    @classmethod
    def ohmic_default(cls, strength: float = 1.0) -> "SpectralDensity":
        return cls(ohmic=strength)

    @classmethod
    def ohmic_with_tls(
        cls,
        strength: float = 1.0,
        amplitude: float = DEFAULT_TLS_AMPLITUDE,
        center: float = DEFAULT_TLS_CENTER,
        width: float = DEFAULT_TLS_WIDTH,
    ) -> "SpectralDensity":
        return cls(ohmic=strength, tls_amplitude=amplitude, tls_center=center, tls_width=width)


def spectral_density_eval(sd: SpectralDensity, omega: float) -> float:
    """S(omega) including the detailed-balance negative-frequency branch."""
    return float(spectral_density_batch(sd, np.asarray([omega]))[0])


def spectral_density_batch(sd: SpectralDensity, omega: np.ndarray) -> np.ndarray:
    """Vectorized S over an array of frequencies."""
    w = np.asarray(omega, dtype=float)
    w = np.where(np.abs(w) < FREQ_TOL, 0.0, w)
    mag = np.abs(w)
    positive = (
        sd.flat
        + np.maximum(0.0, sd.ohmic * mag)
        + sd.tls_amplitude * sd.tls_width**2 / ((mag - sd.tls_center) ** 2 + sd.tls_width**2)
    )
    if sd.temperature == 0.0:
        boltzmann = np.where(w < 0, 0.0, 1.0)
    else:
        boltzmann = np.where(w < 0, np.exp(w / sd.temperature), 1.0)
    return positive * boltzmann


@dataclass(frozen=True)
class NoiseSpec:
    """Which generator to use and how strongly it couples.

    mode is one of "none", "lab_frame", "eigenbasis_davies". The coupling
    axis applies per qubit (z by default, matching flux-amplitude noise);
    rate is the overall prefactor gamma in 1/us. The spectral density only
    matters in eigenbasis mode.
    """

    mode: str = "none"
    axis: str = "z"
    rate: float = 0.0
    density: SpectralDensity = field(default_factory=SpectralDensity)

    def __post_init__(self):
        if self.mode not in ("none", "lab_frame", "eigenbasis_davies"):
            raise OperatorError(f"unknown noise mode {self.mode!r}")
        if self.axis not in ("x", "y", "z"):
            raise OperatorError(f"unknown coupling axis {self.axis!r}")
        if self.rate < 0:
            raise OperatorError("rate must be nonnegative")

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def davies(cls, rate: float, density: SpectralDensity | None = None, axis: str = "z") -> "NoiseSpec":
        return cls(
            mode="eigenbasis_davies",
            axis=axis,
            rate=rate,
            density=density if density is not None else SpectralDensity.ohmic_default(),
        )

    @classmethod
    def lab_frame(cls, rate: float, axis: str = "z") -> "NoiseSpec":
        return cls(mode="lab_frame", axis=axis, rate=rate)


@dataclass(frozen=True)
class RateMatrix:
    """Transition rates between eigenlevels: rates[n, m] is n -> m in 1/us."""

    rates: np.ndarray

    def __post_init__(self):
        r = self.rates
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise OperatorError("rate matrix must be square")
        if np.any(r < 0):
            raise OperatorError("rates must be nonnegative")
        if np.any(np.diag(r) != 0):
            raise OperatorError("rate matrix diagonal must be zero")

    @property
    def dim(self) -> int:
        return self.rates.shape[0]

    def outflow(self) -> np.ndarray:
        """Total departure rate per level."""
        return self.rates.sum(axis=1)

    def classical_generator(self) -> np.ndarray:
        """Generator M of dp/dt = M p on level populations (columns sum to 0)."""
        m = self.rates.T.copy()
        np.fill_diagonal(m, 0.0)
        m -= np.diag(self.outflow())
        return m


def davies_rate_matrix(system: EigenSystem, spec: NoiseSpec, n_qubits: int | None = None) -> RateMatrix:
    """Weak-coupling rates between the eigenlevels of `system`.

    rates[n, m] = gamma * sum_j |<phi_m| sigma_j^axis |phi_n>|^2 * S(E_n - E_m).
    Gaps smaller than the level tolerance are treated as zero frequency.
    The entries are invariant under any rephasing of the eigenvectors.
    """
    if spec.mode != "eigenbasis_davies":
        raise OperatorError("rate matrix is defined for eigenbasis_davies mode")
    dim = system.dim
    n = n_qubits_from_dim(dim) if n_qubits is None else n_qubits
    elements_sq = np.zeros((dim, dim))
    for j in range(1, n + 1):
        op = pauli(spec.axis, j, n)
        mat = system.states.conj().T @ op @ system.states
        elements_sq += np.abs(mat) ** 2
    omega = system.energies[:, None] - system.energies[None, :]
    s_vals = spectral_density_batch(spec.density, omega)
    # rates[n, m]: energy released is E_n - E_m = omega[n, m]; element is |mat[m, n]|^2
    rates = spec.rate * elements_sq.T * s_vals
    np.fill_diagonal(rates, 0.0)
    return RateMatrix(rates=rates)


def n_qubits_from_dim(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise OperatorError(f"dimension {dim} is not a power of two")
    return n


def lab_frame_dissipators(params: ModelParams, spec: NoiseSpec) -> list[np.ndarray]:
    """Collapse operators sqrt(gamma) * sigma_j^axis, one per qubit."""
    if spec.mode != "lab_frame":
        raise OperatorError("dissipators are defined for lab_frame mode")
    root = np.sqrt(spec.rate)
    return [root * pauli(spec.axis, j, params.n_qubits) for j in range(1, params.n_qubits + 1)]
