"""Dense complex linear algebra for small qubit registers.

Everything here works on plain numpy arrays: operators are (d, d) complex
matrices, pure states are length-d complex vectors, density matrices are
(d, d) complex matrices, with d = 2**n_qubits. Qubit sites are 1-based and
qubit 1 is the most significant bit of the computational-basis index, so
for two qubits the basis order is |uu>, |ud>, |du>, |dd|>. Spin up means
sigma^z eigenvalue +1.

Registers are tiny (n <= ~12 by design), so dense storage and full
diagonalization are the simplest and fastest choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import comb

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-9
NORM_TOL = 1e-10
DEGENERACY_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class OperatorError(ValueError):
    """Raised when an operator or state violates its contract."""


class DegeneracyError(OperatorError):
    """Raised when an operation needs a nondegenerate level and finds none."""


@dataclass(frozen=True)
class SpinConfiguration:
    """A computational-basis state, one boolean per qubit (True = up)."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        if not self.bits:
            raise OperatorError("spin configuration needs at least one qubit")

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        """Basis index with qubit 1 as the most significant bit."""
        idx = 0
        for b in self.bits:
            idx = (idx << 1) | (0 if b else 1)
        return idx

    @classmethod
    def from_index(cls, index: int, n_qubits: int) -> "SpinConfiguration":
        if not 0 <= index < 2**n_qubits:
            raise OperatorError(f"basis index {index} out of range for {n_qubits} qubits")
        bits = tuple(((index >> (n_qubits - 1 - j)) & 1) == 0 for j in range(n_qubits))
        return cls(bits)

    @classmethod
    def all_up(cls, n_qubits: int) -> "SpinConfiguration":
        return cls((True,) * n_qubits)

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        """Build from +1/-1 spin values (quantum annealer convention)."""
        if any(s not in (1, -1) for s in spins):
            raise OperatorError(f"spins must be +1 or -1, got {list(spins)}")
        return cls(tuple(s == 1 for s in spins))

    def to_spins(self) -> list[int]:
        return [1 if b else -1 for b in self.bits]

    @property
    def total_sz(self) -> int:
        """Total sigma^z eigenvalue (number up minus number down)."""
        return sum(1 if b else -1 for b in self.bits)

    def state_vector(self) -> np.ndarray:
        psi = np.zeros(2**self.n_qubits, dtype=complex)
        psi[self.index] = 1.0
        return psi

    def __str__(self) -> str:
        return "".join("u" if b else "d" for b in self.bits)


def check_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise OperatorError(f"operator must be square, got shape {op.shape}")
    dev = np.max(np.abs(op - op.conj().T))
    if dev > tol:
        raise OperatorError(f"operator is not Hermitian (max deviation {dev:.3e})")
    return op


def check_state(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    dev = abs(np.vdot(psi, psi).real - 1.0)
    if dev > tol:
        raise OperatorError(f"state is not normalized (deviation {dev:.3e})")
    return psi


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = check_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise OperatorError(f"density matrix trace {tr} deviates from 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -POSITIVITY_TOL:
        raise OperatorError(f"density matrix has negative eigenvalue {evals.min():.3e}")
    return rho


def n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise OperatorError(f"dimension {dim} is not a power of two")
    return n


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def pauli(axis: str, site: int, n_qubits: int) -> np.ndarray:
    """Single-site Pauli operator embedded in an n-qubit register.

    Returns I x ... x sigma^axis x ... x I with the Pauli at the 1-based
    `site` (site 1 acts on the most significant bit).
    """
    if axis not in PAULI:
        raise OperatorError(f"unknown Pauli axis {axis!r}")
    if not 1 <= site <= n_qubits:
        raise OperatorError(f"site {site} out of range 1..{n_qubits}")
    mats = [IDENTITY_2] * n_qubits
    mats[site - 1] = PAULI[axis]
    return kron_all(mats)


@dataclass(frozen=True)
class EigenSystem:
    """Sorted eigendecomposition of a Hermitian operator.

    energies are ascending; states holds the eigenvectors as columns, with
    the phase of each fixed so its largest-magnitude component is real and
    positive (ties resolved by the lowest index).
    """

    energies: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)

    def state(self, n: int) -> np.ndarray:
        return self.states[:, n]

    def gap(self, lower: int = 0, upper: int = 1) -> float:
        return float(self.energies[upper] - self.energies[lower])


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    fixed = vectors.copy()
    for i in range(fixed.shape[1]):
        j = int(np.argmax(np.abs(fixed[:, i])))
        phase = fixed[j, i] / abs(fixed[j, i])
        fixed[:, i] /= phase
    return fixed


def eigensystem(op: np.ndarray) -> EigenSystem:
    """Full eigendecomposition with deterministic phase convention."""
    op = check_hermitian(op)
    try:
        energies, vectors = np.linalg.eigh(op)
    except np.linalg.LinAlgError as exc:
        raise OperatorError(f"eigendecomposition failed: {exc}") from exc
    return EigenSystem(energies=energies, states=_fix_phases(vectors))


def partial_trace(rho: np.ndarray, keep: set[int] | frozenset[int], n_qubits: int | None = None) -> np.ndarray:
    """Trace out every qubit not in `keep` (1-based site labels).

    The kept qubits retain their relative order. Trace is preserved and the
    result is Hermitian whenever the input is.
    """
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[0]) if n_qubits is None else n_qubits
    keep = sorted(set(keep))
    if not keep:
        raise OperatorError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > n:
        raise OperatorError(f"keep set {keep} out of range 1..{n}")

    tensor = rho.reshape((2,) * (2 * n))
    # axis j-1 is the row index of qubit j, axis n+j-1 its column index
    traced = tensor
    removed = 0
    for site in range(1, n + 1):
        if site in keep:
            continue
        ax_row = (site - 1) - removed
        ax_col = ax_row + (n - removed)
        traced = np.trace(traced, axis1=ax_row, axis2=ax_col)
        removed += 1
    dim_keep = 2 ** len(keep)
    return traced.reshape(dim_keep, dim_keep)


def entanglement_entropy(psi: np.ndarray, keep: set[int] | frozenset[int]) -> float:
    """Von Neumann entropy -sum(p ln p) of the reduced state on `keep`.

    Natural logarithm; the maximally entangled two-outcome case gives ln 2.
    """
    psi = check_state(psi)
    rho = np.outer(psi, psi.conj())
    reduced = partial_trace(rho, keep)
    evals = np.linalg.eigvalsh(reduced)
    evals = evals[evals > 1e-15]
    return float(-(evals * np.log(evals)).sum())


def dicke_state(n_qubits: int, s_z: int) -> np.ndarray:
    """Normalized permutation-symmetric basis state with total spin s_z.

    s_z ranges over {-n, -n+2, ..., +n}; the state is the equal-weight
    superposition of every configuration with that many net up spins.
    """
    if (s_z + n_qubits) % 2 != 0 or abs(s_z) > n_qubits:
        raise OperatorError(f"s_z={s_z} invalid for {n_qubits} qubits")
    n_up = (n_qubits + s_z) // 2
    psi = np.zeros(2**n_qubits, dtype=complex)
    for idx in range(2**n_qubits):
        if bin(idx).count("1") == n_qubits - n_up:  # zero bits are up spins
            psi[idx] = 1.0
    return psi / np.sqrt(comb(n_qubits, n_up))


def dicke_labels(n_qubits: int) -> list[int]:
    return list(range(-n_qubits, n_qubits + 1, 2))
