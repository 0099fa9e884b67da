import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qalab.annealer_client import (
    AnnealJob,
    JobResult,
    ProtocolError,
    ServerError,
    SimulatedSampler,
    TransportError,
    job_from_json,
    job_to_json,
    params_from_job,
    poll,
    result_from_json,
    result_to_json,
    schedule_from_job,
    simulated_sampler,
    submit,
    to_anneal_job,
)
from qalab.experiment import ExperimentConfig, run_t1_experiment
from qalab.mock_server import MockAnnealServer
from qalab.model import ModelParams
from qalab.noise import NoiseSpec, SpectralDensity
from qalab.operators import OperatorError, SpinConfiguration

FC = ModelParams.fully_connected()
SQ = ModelParams.single_qubit()
DAVIES = NoiseSpec.davies(rate=0.05, density=SpectralDensity.constant(1.0))


def reference_job(t2=5.0, reads=100):
    cfg = ExperimentConfig(params=FC, h_d=0.5, t1_us=1.0, t3_us=1.0,
                           t2_grid_us=(t2,), shots=reads)
    return to_anneal_job(cfg, t2)


class TestToAnnealJob:
    def test_schedule_vertices(self):
        job = reference_job(t2=5.0)
        assert job.schedule == ((0.0, 1.0), (1.0, 0.5), (6.0, 0.5), (7.0, 1.0))

    def test_zero_hold_collapses_vertices(self):
        job = reference_job(t2=0.0)
        assert len(job.schedule) == 3

    def test_fully_connected_coupling_count(self):
        job = reference_job()
        assert len(job.couplings) == 6
        assert all(v == -1.0 for _, _, v in job.couplings)

    def test_round_trip_to_model(self):
        job = reference_job()
        params = params_from_job(job)
        assert (params.n_qubits, params.coupling, params.longitudinal) == (4, 1.0, 1.0)
        sched = schedule_from_job(job)
        assert (sched.t1, sched.t2, sched.t3, sched.h_d) == (1.0, 5.0, 1.0, 0.5)

    def test_single_qubit_job_has_no_couplings(self):
        cfg = ExperimentConfig(params=SQ, t2_grid_us=(1.0,), shots=10)
        job = to_anneal_job(cfg, 1.0)
        assert job.couplings == ()
        assert params_from_job(job).coupling == 0.0


class TestWireFormat:
    def test_example_payload_shape(self):
        job = reference_job(reads=100_000)
        import json

        payload = json.loads(job_to_json(job))
        assert payload["h"] == [0.5, 0.5, 0.5, 0.5]
        assert payload["j"]["0,1"] == -1.0
        assert payload["initial_state"] == [1, 1, 1, 1]
        assert payload["num_reads"] == 100_000
        assert payload["reinitialize_state"] is True

    def test_job_round_trip(self):
        job = reference_job()
        assert job_from_json(job_to_json(job)) == job

    def test_serialize_parse_identity_on_canonical_text(self):
        text = job_to_json(reference_job())
        assert job_to_json(job_from_json(text)) == text

    def test_result_round_trip(self):
        result = JobResult(
            samples=(SpinConfiguration.all_up(2), SpinConfiguration((False, True))),
            counts=(90, 10),
            job_id="abc",
        )
        assert result_from_json(result_to_json(result)) == result

    def test_malformed_payload(self):
        with pytest.raises(ProtocolError):
            job_from_json("{}")
        with pytest.raises(ProtocolError):
            result_from_json('{"id": "x"}')

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=4),
        coupling=st.floats(-2.0, 2.0, allow_nan=False),
        bias=st.floats(-1.0, 1.0, allow_nan=False),
        t1=st.floats(0.1, 10.0, allow_nan=False),
        t2=st.floats(0.0, 1e6, allow_nan=False),
        t3=st.floats(0.1, 10.0, allow_nan=False),
        hd=st.floats(0.01, 1.0, allow_nan=False),
        reads=st.integers(min_value=1, max_value=10**6),
        flips=st.lists(st.booleans(), min_size=4, max_size=4),
    )
    def test_property_round_trip(self, n, coupling, bias, t1, t2, t3, hd, reads, flips):
        schedule = [(0.0, 1.0), (t1, hd)]
        if t1 + t2 > t1:  # hold vertex only when it is representable
            schedule.append((t1 + t2, hd))
        else:
            t2 = 0.0
        schedule.append((t1 + t2 + t3, 1.0))
        job = AnnealJob(
            linear_biases=(bias,) * n,
            couplings=tuple(
                (i, j, coupling) for i in range(n) for j in range(i + 1, n)
            ) if coupling != 0 else (),
            schedule=tuple(schedule),
            initial_state=SpinConfiguration(tuple(flips[:n])),
            reads=reads,
        )
        text = job_to_json(job)
        assert job_from_json(text) == job
        assert job_to_json(job_from_json(text)) == text


class TestJobValidation:
    def test_schedule_must_increase(self):
        with pytest.raises(OperatorError):
            AnnealJob(
                linear_biases=(0.5,),
                couplings=(),
                schedule=((0.0, 1.0), (0.0, 0.5)),
                initial_state=SpinConfiguration.all_up(1),
                reads=1,
            )

    def test_coupling_indices_in_range(self):
        with pytest.raises(OperatorError):
            AnnealJob(
                linear_biases=(0.5, 0.5),
                couplings=((0, 2, -1.0),),
                schedule=((0.0, 1.0), (1.0, 0.5), (2.0, 1.0)),
                initial_state=SpinConfiguration.all_up(2),
                reads=1,
            )


class TestSimulatedSampler:
    def test_single_read(self):
        job = reference_job(t2=0.0, reads=1)
        result = simulated_sampler(job, NoiseSpec.none(), seed=0)
        assert sum(result.counts) == 1
        assert len(result.samples) == 1

    def test_total_reads_conserved(self):
        job = reference_job(t2=2.0, reads=5000)
        result = simulated_sampler(job, DAVIES, seed=3)
        assert result.total_reads == 5000

    def test_cached_and_fresh_paths_agree(self):
        sampler = SimulatedSampler(DAVIES)
        job_a = reference_job(t2=1.0, reads=2000)
        job_b = reference_job(t2=4.0, reads=2000)
        warm = [sampler.sample(job_a, seed=1), sampler.sample(job_b, seed=2)]
        cold = [simulated_sampler(job_a, DAVIES, 1), simulated_sampler(job_b, DAVIES, 2)]
        for w, c in zip(warm, cold):
            assert w.count_map() == c.count_map()

    def test_experiment_route_equals_direct_calls(self):
        cfg = ExperimentConfig(
            params=FC, h_d=0.5, t1_us=1.0, t3_us=1.0,
            t2_grid_us=(1.0, 3.0), shots=2000, noise=DAVIES, seed=11,
        )
        curve = run_t1_experiment(cfg)
        direct = []
        for i, t2 in enumerate(cfg.t2_grid_us):
            job = to_anneal_job(cfg, t2)
            result = simulated_sampler(job, DAVIES, seed=cfg.seed + i)
            direct.append(result.count_map().get(job.initial_state, 0) / cfg.shots)
        assert list(curve.survival) == direct


class TestMockServer:
    def test_round_trip_matches_in_process(self):
        job = reference_job(t2=2.0, reads=3000)
        with MockAnnealServer(DAVIES, seed=17) as server:
            job_id = submit(job, server.endpoint)
            remote = poll(job_id, server.endpoint, timeout=30.0)
        local = simulated_sampler(job, DAVIES, seed=17)
        assert remote.samples == local.samples
        assert remote.counts == local.counts

    def test_bearer_token_enforced(self):
        job = reference_job(t2=0.0, reads=10)
        with MockAnnealServer(NoiseSpec.none(), seed=0, token="sesame") as server:
            with pytest.raises(ServerError) as excinfo:
                submit(job, server.endpoint)
            assert excinfo.value.status_code == 401
            job_id = submit(job, server.endpoint, token="sesame")
            result = poll(job_id, server.endpoint, timeout=30.0, token="sesame")
            assert result.total_reads == 10

    def test_malformed_job_rejected(self):
        import requests

        with MockAnnealServer(NoiseSpec.none(), seed=0) as server:
            response = requests.post(server.endpoint + "/jobs", data=b"{}", timeout=10)
            assert response.status_code == 400

    def test_unknown_job_id(self):
        with MockAnnealServer(NoiseSpec.none(), seed=0) as server:
            with pytest.raises(ServerError) as excinfo:
                poll("nope", server.endpoint, timeout=5.0)
            assert excinfo.value.status_code == 404

    def test_unreachable_endpoint(self):
        job = reference_job(t2=0.0, reads=1)
        with pytest.raises(TransportError):
            submit(job, "http://127.0.0.1:1", timeout=0.5)
