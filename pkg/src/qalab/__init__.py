"""qalab: a desk-scale reverse-annealing coherence laboratory.

Builds the transverse-field Ising annealing Hamiltonian family, analyzes
its spectrum and entanglement along the reverse-anneal path, evolves the
register under closed or Lindblad dynamics, and runs the full
excited-state relaxation measurement: prepare, anneal, hold, return,
read out, and fit a * exp(-t2 / T1).
"""

__version__ = "0.1.0"

from .experiment import (
    DecayFit,
    ExperimentConfig,
    FitError,
    SurvivalCurve,
    fit_exponential,
    run_t1_experiment,
    sample_readout,
    survival_probability,
    sweep_hd,
    sweep_t1_vs_hd,
)
from .model import (
    ModelParams,
    RqaSchedule,
    driver_hamiltonian,
    initial_excited_configuration,
    longitudinal_hamiltonian,
    operator_norm_bound,
    problem_hamiltonian,
    schedule_k,
    total_hamiltonian,
)
from .noise import NoiseSpec, RateMatrix, SpectralDensity, davies_rate_matrix
from .operators import (
    EigenSystem,
    SpinConfiguration,
    eigensystem,
    entanglement_entropy,
    partial_trace,
    pauli,
)
from .dynamics import (
    EvolutionConfig,
    ProtocolRunner,
    Trajectory,
    evolve_closed,
    evolve_lindblad,
    evolve_static,
)
from .spectral import (
    GapProfile,
    PerturbativeState,
    dicke_sector_energies,
    entropy_along_schedule,
    gap_profile,
    perturbative_ground_and_excited,
    resonance_hd,
    single_qubit_perturbative_states,
    transition_matrix_element,
)

__all__ = [
    "__version__",
    "DecayFit", "ExperimentConfig", "FitError", "SurvivalCurve",
    "fit_exponential", "run_t1_experiment", "sample_readout",
    "survival_probability", "sweep_hd", "sweep_t1_vs_hd",
    "ModelParams", "RqaSchedule", "driver_hamiltonian",
    "initial_excited_configuration", "longitudinal_hamiltonian",
    "operator_norm_bound", "problem_hamiltonian", "schedule_k",
    "total_hamiltonian",
    "NoiseSpec", "RateMatrix", "SpectralDensity", "davies_rate_matrix",
    "EigenSystem", "SpinConfiguration", "eigensystem",
    "entanglement_entropy", "partial_trace", "pauli",
    "EvolutionConfig", "ProtocolRunner", "Trajectory",
    "evolve_closed", "evolve_lindblad", "evolve_static",
    "GapProfile", "PerturbativeState", "dicke_sector_energies",
    "entropy_along_schedule", "gap_profile",
    "perturbative_ground_and_excited", "resonance_hd",
    "single_qubit_perturbative_states", "transition_matrix_element",
]
