"""Strict JSON configuration for the command-line surface.

One document with sections model, schedule, noise, experiment, backend.
Every key is checked against the schema; unknown keys are rejected so a
typo in a sweep definition fails loudly instead of silently running the
default. Grids may be literal lists of numbers or {"start", "stop", "num",
"log"} range specs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .experiment import ExperimentConfig
from .model import ModelParams
from .noise import NoiseSpec, SpectralDensity


class ConfigError(ValueError):
    """Raised for unparseable or out-of-schema configuration."""


PRESETS = {
    "fully_connected": ModelParams.fully_connected,
    "single_qubit": ModelParams.single_qubit,
}


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _grid(value, where: str) -> list[float]:
    if isinstance(value, list):
        if not value or not all(isinstance(x, (int, float)) for x in value):
            raise ConfigError(f"{where} must be a nonempty list of numbers")
        return [float(x) for x in value]
    if isinstance(value, dict):
        _require_keys(value, {"start", "stop", "num", "log"}, where)
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where} range spec needs start, stop, num: {exc}") from exc
        if num < 1:
            raise ConfigError(f"{where} num must be >= 1")
        if value.get("log", False):
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{where} log spacing needs positive bounds")
            return list(np.logspace(np.log10(start), np.log10(stop), num))
        return list(np.linspace(start, stop, num))
    raise ConfigError(f"{where} must be a list or a range spec")


@dataclass(frozen=True)
class LabConfig:
    """Parsed configuration plus the raw snapshot for run manifests."""

    params: ModelParams
    t1_us: float
    t3_us: float
    h_d: float
    noise: NoiseSpec
    shots: int
    seed: int
    t2_grid_us: tuple[float, ...] | None
    hd_grid: tuple[float, ...]
    lambda_grid: tuple[float, ...]
    entropy_points: int
    sweep_t2_us: float
    sampler: str
    endpoint: str | None
    snapshot: dict = field(repr=False)

    def experiment(self, **overrides) -> ExperimentConfig:
        kwargs = dict(
            params=self.params,
            h_d=self.h_d,
            t1_us=self.t1_us,
            t3_us=self.t3_us,
            t2_grid_us=self.t2_grid_us,
            shots=self.shots,
            noise=self.noise,
            seed=self.seed,
            sampler=self.sampler,
        )
        kwargs.update(overrides)
        return ExperimentConfig(**kwargs)


def parse_config(doc: dict) -> LabConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    # a manifest may be passed back in; its embedded snapshot is the config
    if "config" in doc and "code_version" in doc:
        doc = doc["config"]
    _require_keys(doc, {"model", "schedule", "noise", "experiment", "backend"}, "config root")

    model = dict(doc.get("model", {}))
    _require_keys(
        model,
        {"preset", "n_qubits", "coupling", "longitudinal", "transverse", "energy_scale"},
        "model",
    )
    preset = model.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        params = PRESETS[preset](**{k: float(v) if k != "n_qubits" else int(v)
                                    for k, v in model.items()})
    else:
        if "n_qubits" not in model:
            raise ConfigError("model needs either a preset or n_qubits")
        kwargs = {k: float(v) for k, v in model.items() if k != "n_qubits"}
        params = ModelParams(n_qubits=int(model["n_qubits"]), **kwargs)

    schedule = dict(doc.get("schedule", {}))
    _require_keys(schedule, {"t1_us", "t3_us", "h_d"}, "schedule")
    t1_us = float(schedule.get("t1_us", 1.0))
    t3_us = float(schedule.get("t3_us", 1.0))
    h_d = float(schedule.get("h_d", 0.5))

    noise_doc = dict(doc.get("noise", {}))
    _require_keys(noise_doc, {"mode", "axis", "rate", "spectral_density"}, "noise")
    sd_doc = dict(noise_doc.get("spectral_density", {}))
    _require_keys(
        sd_doc,
        {"flat", "ohmic", "tls_amplitude", "tls_center", "tls_width", "temperature"},
        "noise.spectral_density",
    )
    density = SpectralDensity(**{k: float(v) for k, v in sd_doc.items()})
    noise = NoiseSpec(
        mode=noise_doc.get("mode", "none"),
        axis=noise_doc.get("axis", "z"),
        rate=float(noise_doc.get("rate", 0.0)),
        density=density,
    )

    experiment = dict(doc.get("experiment", {}))
    _require_keys(
        experiment,
        {"shots", "seed", "t2_grid_us", "hd_grid", "lambda_grid", "entropy_points",
         "sweep_t2_us"},
        "experiment",
    )
    shots = int(experiment.get("shots", 100_000))
    seed = int(experiment.get("seed", 0))
    t2_raw = experiment.get("t2_grid_us")
    t2_grid = tuple(_grid(t2_raw, "experiment.t2_grid_us")) if t2_raw is not None else None
    hd_grid = tuple(_grid(experiment.get("hd_grid", {"start": 0.05, "stop": 1.0, "num": 96}),
                          "experiment.hd_grid"))
    lambda_grid = tuple(
        _grid(experiment.get("lambda_grid",
                             {"start": 1e-3, "stop": 1e-1, "num": 21, "log": True}),
              "experiment.lambda_grid")
    )
    entropy_points = int(experiment.get("entropy_points", 201))
    sweep_t2_us = float(experiment.get("sweep_t2_us", 10.0))

    backend = dict(doc.get("backend", {}))
    _require_keys(backend, {"sampler", "endpoint", "max_in_flight"}, "backend")
    sampler = backend.get("sampler", "simulated")
    if sampler not in ("simulated", "remote"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    endpoint = backend.get("endpoint")

    return LabConfig(
        params=params,
        t1_us=t1_us,
        t3_us=t3_us,
        h_d=h_d,
        noise=noise,
        shots=shots,
        seed=seed,
        t2_grid_us=t2_grid,
        hd_grid=hd_grid,
        lambda_grid=lambda_grid,
        entropy_points=entropy_points,
        sweep_t2_us=sweep_t2_us,
        sampler=sampler,
        endpoint=endpoint,
        snapshot=doc,
    )


def load_config(path: str | Path) -> LabConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
