"""Sampler backends behind one job abstraction.

An AnnealJob is a backend-neutral description of one reverse-anneal run:
Ising biases and couplings, the piecewise-linear (t, k) schedule, the
initial configuration, and the number of reads. The simulated sampler
executes jobs in process through the Lindblad protocol engine; the remote
sampler speaks a small REST protocol (POST /jobs, GET /jobs/{id}) with
bearer-token auth taken from QALAB_ENDPOINT / QALAB_TOKEN.

Wire format, bit-exact JSON with lowercase keys and +-1 spin encoding:

    request  {"h": [...], "j": {"0,1": -1.0, ...},
              "anneal_schedule": [[t, k], ...],
              "initial_state": [1, 1, 1, 1],
              "num_reads": 100000, "reinitialize_state": true}
    response {"id": "...", "status": "completed",
              "samples": [[1, 1, 1, 1], ...], "counts": [...]}

The remote protocol cannot carry a transverse-field amplitude; simulated
execution of a job always uses Gamma = 1. reinitialize_state is always
true: every read restarts from the supplied initial configuration.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .dynamics import EvolutionConfig, ProtocolRunner
from .experiment import ExperimentConfig, sample_readout
from .model import ModelParams, RqaSchedule, schedule_vertices
from .noise import NoiseSpec
from .operators import OperatorError, SpinConfiguration

DEFAULT_MAX_IN_FLIGHT = 4
POLL_BASE_S = 0.2
POLL_FACTOR = 2.0
POLL_CAP_S = 5.0


class ClientError(RuntimeError):
    """Base class for sampler client failures."""


class TransportError(ClientError):
    """The HTTP request itself failed (connection, DNS, timeout)."""


class ServerError(ClientError):
    """The server answered with a non-2xx status or a failed job."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ProtocolError(ClientError):
    """The server answered 2xx but the payload is not valid protocol JSON."""


class PollTimeout(ClientError):
    """The job did not reach a terminal status within the deadline."""


@dataclass(frozen=True)
class AnnealJob:
    """One reverse-anneal submission."""

    linear_biases: tuple[float, ...]
    couplings: tuple[tuple[int, int, float], ...]  # (i, j, value), i < j, 0-based
    schedule: tuple[tuple[float, float], ...]      # (t, k) vertices
    initial_state: SpinConfiguration
    reads: int
    reinitialize_state: bool = True

    def __post_init__(self):
        n = len(self.linear_biases)
        if n < 1:
            raise OperatorError("job needs at least one qubit")
        if self.initial_state.n_qubits != n:
            raise OperatorError("initial state size does not match bias vector")
        if self.reads < 1:
            raise OperatorError("reads must be >= 1")
        for i, j, _ in self.couplings:
            if not (0 <= i < j < n):
                raise OperatorError(f"coupling indices ({i}, {j}) out of range")
        times = [t for t, _ in self.schedule]
        if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
            raise OperatorError("schedule times must be strictly increasing")
        if any(not 0 <= k <= 1 for _, k in self.schedule):
            raise OperatorError("schedule k values must lie in [0, 1]")

    @property
    def n_qubits(self) -> int:
        return len(self.linear_biases)


@dataclass(frozen=True)
class JobResult:
    """Samples and counts returned for a job."""

    samples: tuple[SpinConfiguration, ...]
    counts: tuple[int, ...]
    job_id: str
    status: str = "completed"

    def __post_init__(self):
        if len(self.samples) != len(self.counts):
            raise OperatorError("samples and counts must have equal length")
        if self.status not in ("completed", "failed", "pending"):
            raise OperatorError(f"unknown job status {self.status!r}")

    def count_map(self) -> dict[SpinConfiguration, int]:
        return dict(zip(self.samples, self.counts))

    @property
    def total_reads(self) -> int:
        return sum(self.counts)


def to_anneal_job(cfg: ExperimentConfig, t2: float) -> AnnealJob:
    """Translate an experiment point into a submission payload.

    Schedule vertices are [(0, 1), (t1, h_d), (t1+t2, h_d), (total, 1)],
    with the duplicate middle vertex dropped when t2 = 0. Bias and coupling
    signs follow the classical Hamiltonian sum_j (h/2) s_j - J sum_{j<k}
    s_j s_k, i.e. bias h/2 per qubit and coupling entry -J per pair.
    """
    from .model import initial_excited_configuration

    p = cfg.params
    schedule = RqaSchedule(t1=cfg.t1_us, t2=t2, t3=cfg.t3_us, h_d=cfg.h_d)
    vertices = tuple((pt.t, pt.k) for pt in schedule_vertices(schedule))
    couplings = tuple(
        (i, j, -p.coupling)
        for i in range(p.n_qubits)
        for j in range(i + 1, p.n_qubits)
        if p.coupling != 0.0
    )
    return AnnealJob(
        linear_biases=(p.longitudinal / 2.0,) * p.n_qubits,
        couplings=couplings,
        schedule=vertices,
        initial_state=initial_excited_configuration(p),
        reads=cfg.shots,
    )


def params_from_job(job: AnnealJob) -> ModelParams:
    """Recover ModelParams from a job; exact for the supported presets."""
    biases = set(job.linear_biases)
    if len(biases) != 1:
        raise OperatorError("only uniform linear biases are supported")
    longitudinal = 2.0 * job.linear_biases[0]
    n = job.n_qubits
    if not job.couplings:
        coupling = 0.0
    else:
        values = {v for _, _, v in job.couplings}
        if len(values) != 1:
            raise OperatorError("only uniform couplings are supported")
        expected_pairs = n * (n - 1) // 2
        if len(job.couplings) != expected_pairs:
            raise OperatorError("only fully connected couplings are supported")
        coupling = -values.pop()
    return ModelParams(n_qubits=n, coupling=coupling, longitudinal=longitudinal, transverse=1.0)


def schedule_from_job(job: AnnealJob) -> RqaSchedule:
    """Recover the reverse-anneal schedule from the job's (t, k) vertices."""
    v = job.schedule
    if len(v) not in (3, 4):
        raise OperatorError(f"expected 3 or 4 schedule vertices, got {len(v)}")
    if v[0] != (0.0, 1.0) or v[-1][1] != 1.0:
        raise OperatorError("schedule must start and end at k = 1")
    t1, hd = v[1]
    if len(v) == 4:
        t_mid, hd2 = v[2]
        if hd2 != hd:
            raise OperatorError("hold vertices disagree on h_d")
        t2 = t_mid - t1
    else:
        t2 = 0.0
    t3 = v[-1][0] - t1 - t2
    return RqaSchedule(t1=t1, t2=t2, t3=t3, h_d=hd)


def job_to_json(job: AnnealJob) -> str:
    """Canonical request serialization (field order fixed, UTF-8)."""
    payload = {
        "h": list(job.linear_biases),
        "j": {f"{i},{j}": v for i, j, v in job.couplings},
        "anneal_schedule": [[t, k] for t, k in job.schedule],
        "initial_state": job.initial_state.to_spins(),
        "num_reads": job.reads,
        "reinitialize_state": job.reinitialize_state,
    }
    return json.dumps(payload, separators=(",", ":"))


def job_from_json(text: str | bytes) -> AnnealJob:
    try:
        payload = json.loads(text)
        biases = tuple(float(x) for x in payload["h"])
        couplings = []
        for key, value in payload["j"].items():
            i, j = (int(part) for part in key.split(","))
            couplings.append((i, j, float(value)))
        couplings.sort()
        schedule = tuple((float(t), float(k)) for t, k in payload["anneal_schedule"])
        initial = SpinConfiguration.from_spins(payload["initial_state"])
        return AnnealJob(
            linear_biases=biases,
            couplings=tuple(couplings),
            schedule=schedule,
            initial_state=initial,
            reads=int(payload["num_reads"]),
            reinitialize_state=bool(payload["reinitialize_state"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed job payload: {exc}") from exc


def result_to_json(result: JobResult) -> str:
    payload = {
        "id": result.job_id,
        "status": result.status,
        "samples": [s.to_spins() for s in result.samples],
        "counts": list(result.counts),
    }
    return json.dumps(payload, separators=(",", ":"))


def result_from_json(text: str | bytes) -> JobResult:
    try:
        payload = json.loads(text)
        samples = tuple(SpinConfiguration.from_spins(s) for s in payload["samples"])
        return JobResult(
            samples=samples,
            counts=tuple(int(c) for c in payload["counts"]),
            job_id=str(payload["id"]),
            status=str(payload["status"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed result payload: {exc}") from exc


def simulated_sampler(job: AnnealJob, noise: NoiseSpec, seed: int,
                      runner: ProtocolRunner | None = None) -> JobResult:
    """Execute one job in process: Lindblad protocol run plus readout.

    Semantically identical to the experiment module's in-process path: the
    experiment builds the same job and calls this function.
    """
    params = params_from_job(job)
    schedule = schedule_from_job(job)
    if runner is None:
        runner = ProtocolRunner(
            params, schedule.with_hold(0.0), noise, EvolutionConfig.for_params(params)
        )
    psi0 = job.initial_state.state_vector()
    rho0 = np.outer(psi0, psi0.conj())
    rho_final = runner.run(rho0, schedule.t2)
    counts = sample_readout(rho_final, job.reads, seed)
    ordered = sorted(counts.items(), key=lambda item: item[0].index)
    return JobResult(
        samples=tuple(cfg for cfg, _ in ordered),
        counts=tuple(c for _, c in ordered),
        job_id=f"sim-{seed}",
        status="completed",
    )


class SimulatedSampler:
    """In-process sampler that reuses protocol engines across hold durations.

    The cached ramp computation is a pure function of the job parameters,
    so caching cannot change any result, only the time it takes.
    """

    def __init__(self, noise: NoiseSpec):
        self.noise = noise
        self._runners: dict = {}
        self._lock = threading.Lock()

    def _runner_for(self, job: AnnealJob) -> ProtocolRunner:
        params = params_from_job(job)
        schedule = schedule_from_job(job).with_hold(0.0)
        key = (params, schedule)
        with self._lock:
            runner = self._runners.get(key)
            if runner is None:
                runner = ProtocolRunner(params, schedule, self.noise,
                                        EvolutionConfig.for_params(params))
                self._runners[key] = runner
            return runner

    def sample(self, job: AnnealJob, seed: int) -> JobResult:
        return simulated_sampler(job, self.noise, seed, runner=self._runner_for(job))


_ENDPOINT_SEMAPHORES: dict[str, threading.BoundedSemaphore] = {}
_SEMAPHORE_LOCK = threading.Lock()


def _endpoint_slot(endpoint: str, max_in_flight: int) -> threading.BoundedSemaphore:
    with _SEMAPHORE_LOCK:
        sem = _ENDPOINT_SEMAPHORES.get(endpoint)
        if sem is None:
            sem = threading.BoundedSemaphore(max_in_flight)
            _ENDPOINT_SEMAPHORES[endpoint] = sem
        return sem


def _auth_headers(token: str | None) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def submit(job: AnnealJob, endpoint: str, token: str | None = None,
           timeout: float = 30.0) -> str:
    """POST the job; returns the server-assigned id."""
    url = endpoint.rstrip("/") + "/jobs"
    try:
        response = requests.post(
            url, data=job_to_json(job).encode("utf-8"),
            headers=_auth_headers(token), timeout=timeout,
        )
    except requests.RequestException as exc:
        raise TransportError(f"job submission to {url} failed: {exc}") from exc
    if not 200 <= response.status_code < 300:
        raise ServerError(
            f"submission rejected with HTTP {response.status_code}: {response.text[:200]}",
            status_code=response.status_code,
        )
    try:
        job_id = json.loads(response.text)["id"]
    except (ValueError, KeyError) as exc:
        raise ProtocolError(f"submission response is not protocol JSON: {exc}") from exc
    return str(job_id)


def poll(job_id: str, endpoint: str, timeout: float = 60.0,
         token: str | None = None) -> JobResult:
    """GET the job until it completes or fails, with bounded backoff."""
    url = endpoint.rstrip("/") + f"/jobs/{job_id}"
    deadline = time.monotonic() + timeout
    delay = POLL_BASE_S
    while True:
        try:
            response = requests.get(url, headers=_auth_headers(token), timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(f"polling {url} failed: {exc}") from exc
        if not 200 <= response.status_code < 300:
            raise ServerError(
                f"poll rejected with HTTP {response.status_code}: {response.text[:200]}",
                status_code=response.status_code,
            )
        result = result_from_json(response.text)
        if result.status == "completed":
            return result
        if result.status == "failed":
            raise ServerError(f"job {job_id} failed on the server")
        if time.monotonic() + delay > deadline:
            raise PollTimeout(f"job {job_id} still pending after {timeout} s")
        time.sleep(delay)
        delay = min(delay * POLL_FACTOR, POLL_CAP_S)


@dataclass
class RemoteSampler:
    """Sampler that submits jobs to a remote endpoint.

    Seeds are accepted for interface parity but the remote backend owns its
    own randomness; determinism holds only for the simulated backend.
    """

    endpoint: str
    token: str | None = None
    poll_timeout: float = 120.0
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    @classmethod
    def from_environment(cls) -> "RemoteSampler":
        import os

        endpoint = os.environ.get("QALAB_ENDPOINT")
        if not endpoint:
            raise ClientError("QALAB_ENDPOINT is not set")
        return cls(endpoint=endpoint, token=os.environ.get("QALAB_TOKEN"))

    def sample(self, job: AnnealJob, seed: int = 0) -> JobResult:
        slot = _endpoint_slot(self.endpoint, self.max_in_flight)
        with slot:
            job_id = submit(job, self.endpoint, token=self.token)
            return poll(job_id, self.endpoint, timeout=self.poll_timeout, token=self.token)
