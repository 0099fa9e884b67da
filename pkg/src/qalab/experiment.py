"""The relaxation-time measurement protocol, end to end.

A run prepares the register in the classical first excited configuration,
executes the reverse-anneal schedule for a grid of hold durations t2
through a sampler backend, converts readout counts into survival
probabilities, and fits a * exp(-t2 / T1) to extract the energy relaxation
time. Sweeps repeat the procedure across hold points h_d.

Determinism contract: every measurement point derives its RNG seed from the
experiment seed and the point index (seed + index), so sweeps produce
bit-identical results whether they run sequentially or across threads, and
reruns with the same configuration reproduce every count exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import curve_fit

from .model import ModelParams, RqaSchedule
from .noise import NoiseSpec
from .operators import OperatorError, SpinConfiguration

DEFAULT_SHOTS = 100_000
SWEEP_SEED_STRIDE = 1_000_003
PILOT_SEED_OFFSET = 900_000
PROBABILITY_TOL = 1e-6


class FitError(RuntimeError):
    """Raised when the decay fit is impossible or fails to converge."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one relaxation measurement needs.

    t2_grid_us may be None, in which case the grid is chosen automatically
    from a short pilot scan. The sampler field selects the backend:
    "simulated" runs in process, "remote" goes through the job client.
    """

    params: ModelParams
    h_d: float = 0.5
    t1_us: float = 1.0
    t3_us: float = 1.0
    t2_grid_us: tuple[float, ...] | None = None
    shots: int = DEFAULT_SHOTS
    noise: NoiseSpec = field(default_factory=NoiseSpec.none)
    seed: int = 0
    sampler: str = "simulated"

    def __post_init__(self):
        if self.shots < 1:
            raise OperatorError("shots must be >= 1")
        if self.sampler not in ("simulated", "remote"):
            raise OperatorError(f"unknown sampler {self.sampler!r}")
        if self.t2_grid_us is not None:
            grid = tuple(float(t) for t in self.t2_grid_us)
            if not grid:
                raise OperatorError("t2 grid must be nonempty")
            if any(t < 0 for t in grid):
                raise OperatorError("t2 values must be nonnegative")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise OperatorError("t2 grid must be strictly increasing")
            object.__setattr__(self, "t2_grid_us", grid)
        # schedule construction validates t1, t3, h_d
        self.schedule_template()

    def schedule_template(self) -> RqaSchedule:
        return RqaSchedule(t1=self.t1_us, t2=0.0, t3=self.t3_us, h_d=self.h_d)

    def with_hd(self, h_d: float) -> "ExperimentConfig":
        return replace(self, h_d=h_d)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SurvivalCurve:
    """Measured (t2, survival, shots) points for one initial configuration."""

    t2_us: tuple[float, ...]
    survival: tuple[float, ...]
    shots: tuple[int, ...]
    initial: SpinConfiguration

    def __post_init__(self):
        if any(not 0 <= p <= 1 for p in self.survival):
            raise OperatorError("survival probabilities must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.t2_us, self.t2_us[1:])):
            raise OperatorError("curve t2 values must be strictly increasing")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares parameters of a * exp(-t / T1)."""

    a: float
    t1_us: float
    residual: float
    covariance: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        if self.t1_us <= 0:
            raise FitError(f"fitted T1 must be positive, got {self.t1_us}")
        if self.residual < 0:
            raise FitError("fit residual must be nonnegative")


def sample_readout(rho: np.ndarray, shots: int, seed: int) -> dict[SpinConfiguration, int]:
    """Multinomial computational-basis readout of a density matrix.

    Probabilities are the diagonal of rho, clamped at zero and renormalized
    (a deviation of the total mass beyond tolerance is an error, not a
    renormalization). Same seed, same counts.
    """
    if shots < 1:
        raise OperatorError("shots must be >= 1")
    rho = np.asarray(rho)
    probs = np.real(np.diag(rho)).copy()
    total = probs.sum()
    if abs(total - 1.0) > PROBABILITY_TOL:
        raise OperatorError(f"readout probability mass {total} deviates from 1")
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    n_qubits = int(round(np.log2(len(probs))))
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    return {
        SpinConfiguration.from_index(idx, n_qubits): int(c)
        for idx, c in enumerate(counts)
        if c > 0
    }


def survival_probability(counts: dict[SpinConfiguration, int], initial: SpinConfiguration) -> float:
    """Fraction of readouts equal to the initial configuration."""
    total = sum(counts.values())
    if total < 1:
        raise OperatorError("empty readout counts")
    return counts.get(initial, 0) / total


def make_sampler(cfg: ExperimentConfig):
    """Backend selected by the configuration (import deferred to avoid cycles)."""
    from . import annealer_client

    if cfg.sampler == "simulated":
        return annealer_client.SimulatedSampler(cfg.noise)
    return annealer_client.RemoteSampler.from_environment()


def _measure_point(cfg: ExperimentConfig, sampler, t2: float, seed: int) -> float:
    from . import annealer_client

    job = annealer_client.to_anneal_job(cfg, t2)
    result = sampler.sample(job, seed=seed)
    return survival_probability(result.count_map(), job.initial_state)


def run_t1_experiment(cfg: ExperimentConfig, sampler=None) -> SurvivalCurve:
    """Measure the survival curve over the configured t2 grid.

    Point i uses seed cfg.seed + i. Results come back in t2 order no matter
    how the points were executed.
    """
    from .model import initial_excited_configuration

    sampler = sampler if sampler is not None else make_sampler(cfg)
    grid = cfg.t2_grid_us
    if grid is None:
        grid = tuple(auto_t2_grid(cfg, sampler))
    initial = initial_excited_configuration(cfg.params)
    survivals = [
        _measure_point(cfg, sampler, t2, cfg.seed + i) for i, t2 in enumerate(grid)
    ]
    return SurvivalCurve(
        t2_us=tuple(float(t) for t in grid),
        survival=tuple(survivals),
        shots=(cfg.shots,) * len(grid),
        initial=initial,
    )


def auto_t2_grid(cfg: ExperimentConfig, sampler, points: int = 12) -> np.ndarray:
    """Pick a log-spaced t2 grid from a three-point pilot decay estimate.

    Probes survival at three decades of t2, estimates T1 by log-linear
    regression, and spans 0.1 * T1 .. 3 * T1 with `points` samples. The
    probe rescales itself when the decay is too slow or too fast to see.
    """
    scale = 1.0
    t1_guess = None
    for attempt in range(5):
        probe = np.array([scale, 10 * scale, 100 * scale])
        ps = np.array([
            _measure_point(cfg, sampler, t2, cfg.seed + PILOT_SEED_OFFSET + 10 * attempt + i)
            for i, t2 in enumerate(probe)
        ])
        if ps[0] < 0.05:
            scale /= 100.0
            continue
        mask = ps > 0
        if mask.sum() >= 2:
            slope = np.polyfit(probe[mask], np.log(ps[mask]), 1)[0]
            if slope < 0 and ps[-1] < 0.9 * ps[0]:
                t1_guess = -1.0 / slope
                break
        scale *= 100.0
        if scale > 1e8:
            break
    if t1_guess is None:
        raise FitError("pilot scan found no measurable decay; provide t2_grid_us")
    return np.logspace(np.log10(0.1 * t1_guess), np.log10(3.0 * t1_guess), points)


def _decay_model(t, a, t1):
    return a * np.exp(-t / t1)


def fit_exponential(curve: SurvivalCurve) -> DecayFit:
    """Nonlinear least squares for (a, T1), seeded by a log-linear fit.

    Needs at least three points and at least two distinct survival values;
    a constant curve has no identifiable decay time.
    """
    t = np.asarray(curve.t2_us, dtype=float)
    p = np.asarray(curve.survival, dtype=float)
    if len(t) < 3:
        raise FitError("need at least 3 points to fit a decay")
    if np.allclose(p, p[0], rtol=0, atol=1e-15):
        raise FitError("constant survival curve: T1 unidentifiable")

    mask = p > 0
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(t[mask], np.log(p[mask]), 1)
        if slope < 0:
            p0 = (float(np.exp(intercept)), float(-1.0 / slope))
        else:
            p0 = (float(max(p.max(), 1e-6)), float(10.0 * t.max()))
    else:
        p0 = (float(max(p.max(), 1e-6)), float(max(t.max(), 1.0) / 3.0))

    try:
        popt, pcov = curve_fit(
            _decay_model, t, p, p0=p0,
            bounds=([1e-300, 1e-300], [np.inf, np.inf]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitError(f"decay fit did not converge: {exc}") from exc
    residual = float(np.sqrt(np.mean((p - _decay_model(t, *popt)) ** 2)))
    # curves without measurable decay (for example any noiseless-generator
    # curve sampled with finite shots) leave T1 statistically undetermined:
    # its one-sigma uncertainty matches or exceeds the value itself
    sigma_t1 = float(np.sqrt(np.asarray(pcov)[1, 1]))
    if not np.isfinite(sigma_t1) or sigma_t1 >= popt[1]:
        raise FitError(
            f"T1 = {popt[1]:.3g} +- {sigma_t1:.3g} us is statistically "
            "unidentifiable from this curve"
        )
    cov = tuple(tuple(float(x) for x in row) for row in np.asarray(pcov))
    return DecayFit(a=float(popt[0]), t1_us=float(popt[1]), residual=residual, covariance=cov)


def _run_indexed(indexed_jobs, threads: int):
    """Execute index-tagged thunks, returning results in index order."""
    if threads <= 1:
        return [job() for _, job in indexed_jobs]
    results = [None] * len(indexed_jobs)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(job): idx for idx, job in indexed_jobs}
        for fut, idx in futures.items():
            results[idx] = fut.result()
    return results


def sweep_hd(cfg: ExperimentConfig, h_d_grid, t2: float, sampler=None,
             threads: int = 1) -> list[tuple[float, float]]:
    """Survival at one fixed hold duration across a grid of hold points."""
    grid = [float(h) for h in h_d_grid]
    if any(not 0 < h <= 1 for h in grid):
        raise OperatorError("h_d grid values must lie in (0, 1]")
    sampler = sampler if sampler is not None else make_sampler(cfg)

    def point(i: int, hd: float):
        def job():
            sub = cfg.with_hd(hd)
            return _measure_point(sub, sampler, t2, cfg.seed + i)
        return job

    jobs = [(i, point(i, hd)) for i, hd in enumerate(grid)]
    survivals = _run_indexed(jobs, threads)
    return list(zip(grid, survivals))


def sweep_t1_vs_hd(cfg: ExperimentConfig, h_d_grid, sampler=None,
                   threads: int = 1) -> list[tuple[float, DecayFit]]:
    """Full relaxation-time measurement for every hold point in the grid."""
    grid = [float(h) for h in h_d_grid]
    if any(not 0 < h <= 1 for h in grid):
        raise OperatorError("h_d grid values must lie in (0, 1]")
    sampler = sampler if sampler is not None else make_sampler(cfg)

    def point(i: int, hd: float):
        def job():
            sub = cfg.with_hd(hd).with_seed(cfg.seed + i * SWEEP_SEED_STRIDE)
            curve = run_t1_experiment(sub, sampler)
            return fit_exponential(curve)
        return job

    jobs = [(i, point(i, hd)) for i, hd in enumerate(grid)]
    fits = _run_indexed(jobs, threads)
    return list(zip(grid, fits))


def format_float(x: float) -> str:
    """17 significant digits, '.' decimal separator, no locale dependence."""
    return f"{float(x):.17g}"


def curve_to_csv(curve: SurvivalCurve) -> str:
    lines = ["t2_us,survival,shots"]
    for t, p, s in zip(curve.t2_us, curve.survival, curve.shots):
        lines.append(f"{format_float(t)},{format_float(p)},{s}")
    return "\n".join(lines) + "\n"


def fit_to_json(fit: DecayFit) -> str:
    payload = {
        "a": fit.a,
        "t1_us": fit.t1_us,
        "residual": fit.residual,
        "covariance": [list(row) for row in fit.covariance],
    }
    return json.dumps(payload, indent=2) + "\n"
