"""Command-line surface.

Subcommands: spectrum | relax | sweep | entropy | perturb-check | submit.
Every report writes deterministic CSV/JSON data (17 significant digits,
'.' decimal separator, LF newlines), a PNG figure rendered from the same
data, and a manifest.json recording the config snapshot, code version,
seed, and output paths. Re-running with the same config and seed on the
simulated backend reproduces the data files byte for byte; a manifest can
itself be passed as --config to re-run from its embedded snapshot.

Exit codes: 0 success, 2 configuration errors, 1 runtime failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .annealer_client import ClientError, RemoteSampler
from .config import ConfigError, LabConfig, load_config
from .experiment import (
    FitError,
    curve_to_csv,
    fit_exponential,
    fit_to_json,
    format_float,
    make_sampler,
    run_t1_experiment,
    sweep_hd,
    sweep_t1_vs_hd,
)
from .model import ModelParams, RqaSchedule
from .spectral import (
    gap_profile,
    resonance_hd,
    scaling_slope,
    single_qubit_element_vs_lambda,
    entropy_along_schedule,
    transition_element_vs_lambda,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _write_manifest(out_dir: Path, cfg: LabConfig, outputs: list[Path]) -> Path:
    manifest = {
        "config": cfg.snapshot,
        "code_version": __version__,
        "seed": cfg.seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2) + "\n")
    return path


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, float) else str(v) for v in row
        ))
    return "\n".join(lines) + "\n"


def cmd_spectrum(cfg: LabConfig, out_dir: Path) -> int:
    from . import plotting

    grid = np.asarray(cfg.hd_grid)
    profile = gap_profile(cfg.params, grid)
    elements = transition_element_vs_lambda(cfg.params, 1.0 - grid)
    csv_path = out_dir / "spectrum.csv"
    _atomic_write(csv_path, _csv(
        "h_d,gap,transition_element_z",
        zip((float(h) for h in grid), (float(g) for g in profile.gap),
            (float(e) for e in elements)),
    ))
    png_path = out_dir / "spectrum.png"
    plotting.gap_profile_figure(grid, profile.gap, elements, png_path,
                                resonance=resonance_hd(cfg.params))
    _write_manifest(out_dir, cfg, [csv_path, png_path])
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_relax(cfg: LabConfig, out_dir: Path, sampler=None) -> int:
    from . import plotting

    exp_cfg = cfg.experiment()
    sampler = sampler if sampler is not None else make_sampler(exp_cfg)
    curve = run_t1_experiment(exp_cfg, sampler)
    curve_path = out_dir / "relax_curve.csv"
    _atomic_write(curve_path, curve_to_csv(curve))
    outputs = [curve_path]
    code = EXIT_OK
    fit = None
    try:
        fit = fit_exponential(curve)
        fit_path = out_dir / "relax_fit.json"
        _atomic_write(fit_path, fit_to_json(fit))
        outputs.append(fit_path)
    except FitError as exc:
        print(f"decay fit failed, curve retained: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    png_path = out_dir / "relax.png"
    plotting.survival_curve_figure(curve, fit, png_path)
    outputs.append(png_path)
    _write_manifest(out_dir, cfg, outputs)
    print(f"wrote {curve_path}")
    return code


def cmd_sweep(cfg: LabConfig, out_dir: Path, mode: str, threads: int, sampler=None) -> int:
    from . import plotting

    exp_cfg = cfg.experiment()
    sampler = sampler if sampler is not None else make_sampler(exp_cfg)
    grid = cfg.hd_grid
    if mode == "survival":
        points = sweep_hd(exp_cfg, grid, cfg.sweep_t2_us, sampler, threads=threads)
        csv_path = out_dir / "sweep_survival.csv"
        _atomic_write(csv_path, _csv("h_d,survival", points))
        png_path = out_dir / "sweep_survival.png"
        plotting.sweep_survival_figure([h for h, _ in points], [s for _, s in points], png_path)
    else:
        fits = sweep_t1_vs_hd(exp_cfg, grid, sampler, threads=threads)
        csv_path = out_dir / "sweep_t1.csv"
        _atomic_write(csv_path, _csv(
            "h_d,t1_us,a,residual",
            ((h, f.t1_us, f.a, f.residual) for h, f in fits),
        ))
        png_path = out_dir / "sweep_t1.png"
        plotting.sweep_t1_figure([h for h, _ in fits], [f.t1_us for _, f in fits], png_path)
    _write_manifest(out_dir, cfg, [csv_path, png_path])
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_entropy(cfg: LabConfig, out_dir: Path) -> int:
    from . import plotting

    schedule = RqaSchedule(t1=cfg.t1_us, t2=cfg.sweep_t2_us, t3=cfg.t3_us, h_d=cfg.h_d)
    times = np.linspace(0.0, schedule.total, cfg.entropy_points)
    profile = entropy_along_schedule(cfg.params, schedule, times)
    csv_path = out_dir / "entropy.csv"
    _atomic_write(csv_path, _csv("t_us,entropy", profile))
    png_path = out_dir / "entropy.png"
    plotting.entropy_figure([t for t, _ in profile], [s for _, s in profile], png_path)
    _write_manifest(out_dir, cfg, [csv_path, png_path])
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_perturb_check(cfg: LabConfig, out_dir: Path) -> int:
    from . import plotting

    lambdas = np.asarray(cfg.lambda_grid)
    four_qubit = ModelParams.fully_connected(
        coupling=cfg.params.coupling if cfg.params.n_qubits == 4 else 1.0,
        longitudinal=cfg.params.longitudinal,
    )
    elem_4q = transition_element_vs_lambda(four_qubit, lambdas)
    elem_1q = single_qubit_element_vs_lambda(lambdas)
    slope_4q = scaling_slope(lambdas, elem_4q)
    slope_1q = scaling_slope(lambdas, elem_1q)
    csv_path = out_dir / "perturb_check.csv"
    _atomic_write(csv_path, _csv(
        "lambda,elem_4q,elem_1q,slope_4q,slope_1q",
        ((float(l), float(e4), float(e1), slope_4q, slope_1q)
         for l, e4, e1 in zip(lambdas, elem_4q, elem_1q)),
    ))
    png_path = out_dir / "perturb_check.png"
    plotting.perturbation_scaling_figure(lambdas, elem_4q, elem_1q,
                                         slope_4q, slope_1q, png_path)
    _write_manifest(out_dir, cfg, [csv_path, png_path])
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_submit(cfg: LabConfig, out_dir: Path, endpoint: str | None) -> int:
    endpoint = endpoint or cfg.endpoint or os.environ.get("QALAB_ENDPOINT")
    if not endpoint:
        print("no endpoint: pass --endpoint, set backend.endpoint, or QALAB_ENDPOINT",
              file=sys.stderr)
        return EXIT_CONFIG
    sampler = RemoteSampler(endpoint=endpoint, token=os.environ.get("QALAB_TOKEN"))
    return cmd_relax(cfg, out_dir, sampler=sampler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qalab",
        description="Reverse-anneal coherence laboratory: spectra, relaxation "
                    "measurements, and sweeps for small Ising registers.",
    )
    parser.add_argument("--version", action="version", version=f"qalab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config (or a manifest.json)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep workers")

    common(sub.add_parser("spectrum", help="gap and transition element against h_d"))
    common(sub.add_parser("relax", help="survival curve over t2 plus decay fit"))
    sweep = sub.add_parser("sweep", help="survival or T1 against h_d")
    common(sweep)
    sweep.add_argument("--mode", choices=("survival", "t1"), default="survival")
    common(sub.add_parser("entropy", help="entanglement entropy along the schedule"))
    common(sub.add_parser("perturb-check", help="transition-element scaling in lambda"))
    submit = sub.add_parser("submit", help="run the relaxation experiment remotely")
    common(submit)
    submit.add_argument("--endpoint", default=None, help="remote endpoint URL")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (FileNotFoundError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out_dir)
        if args.command == "relax":
            return cmd_relax(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, args.mode, args.threads)
        if args.command == "entropy":
            return cmd_entropy(cfg, out_dir)
        if args.command == "perturb-check":
            return cmd_perturb_check(cfg, out_dir)
        if args.command == "submit":
            return cmd_submit(cfg, out_dir, args.endpoint)
        raise AssertionError(f"unhandled command {args.command}")
    except ClientError as exc:
        print(f"sampler error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # surface anything else as a failure exit
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
