"""In-repo mock of the remote annealer REST service.

Wraps the in-process simulated sampler behind the same POST /jobs and
GET /jobs/{id} surface the real endpoint would expose, so the remote client
can be exercised end to end in tests without a network. Jobs complete
synchronously; every job is sampled with the seed the server was built
with, so a mock round trip reproduces the matching direct call exactly.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .annealer_client import (
    JobResult,
    job_from_json,
    result_to_json,
    simulated_sampler,
)
from .noise import NoiseSpec


class MockAnnealServer:
    """A tiny threaded HTTP server executing jobs via simulated_sampler."""

    def __init__(self, noise: NoiseSpec, seed: int = 0, token: str | None = None,
                 host: str = "127.0.0.1", port: int = 0):
        self.noise = noise
        self.seed = seed
        self.token = token
        self._results: dict[str, JobResult] = {}
        self._counter = 0
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def _reject(self, code: int, message: str):
                body = json.dumps({"error": message}).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _authorized(self) -> bool:
                if server.token is None:
                    return True
                return self.headers.get("Authorization") == f"Bearer {server.token}"

            def do_POST(self):
                if self.path != "/jobs":
                    self._reject(404, "unknown path")
                    return
                if not self._authorized():
                    self._reject(401, "missing or invalid token")
                    return
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length)
                try:
                    job = job_from_json(body)
                except Exception as exc:
                    self._reject(400, f"bad job: {exc}")
                    return
                job_id = server._run_job(job)
                payload = json.dumps({"id": job_id}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                if not self.path.startswith("/jobs/"):
                    self._reject(404, "unknown path")
                    return
                if not self._authorized():
                    self._reject(401, "missing or invalid token")
                    return
                job_id = self.path[len("/jobs/"):]
                result = server._results.get(job_id)
                if result is None:
                    self._reject(404, f"unknown job {job_id}")
                    return
                payload = result_to_json(result).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def _run_job(self, job) -> str:
        result = simulated_sampler(job, self.noise, self.seed)
        with self._lock:
            self._counter += 1
            job_id = f"mock-{self._counter:06d}"
        self._results[job_id] = JobResult(
            samples=result.samples, counts=result.counts,
            job_id=job_id, status="completed",
        )
        return job_id

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockAnnealServer":
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "MockAnnealServer":
        return self.start()

    def __exit__(self, *exc_info):
        self.stop()
