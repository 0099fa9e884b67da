"""Figure rendering for the report commands.

Every CLI report writes its delimited data first and then, via these
helpers, a PNG next to it. Figures are presentation artifacts only; the
CSV/JSON files are the contract outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import DecayFit, SurvivalCurve

DPI = 150


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def survival_curve_figure(curve: SurvivalCurve, fit: DecayFit | None, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    t = np.asarray(curve.t2_us)
    ax.plot(t, curve.survival, "o", label="measured")
    if fit is not None:
        dense = np.linspace(t.min(), t.max(), 400)
        ax.plot(dense, fit.a * np.exp(-dense / fit.t1_us), "-",
                label=f"fit: a={fit.a:.3f}, T1={fit.t1_us:.4g} us")
    ax.set_xlabel(r"hold duration $t_2$ ($\mu$s)")
    ax.set_ylabel("survival probability")
    ax.legend()
    _save(fig, path)


def gap_profile_figure(h_d, gap, element, path, resonance: float | None = None) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    ax1.plot(h_d, gap, "-")
    ax1.axhline(0.75, color="gray", linestyle="--", linewidth=0.8)
    if resonance is not None:
        ax1.axvline(resonance, color="tab:red", linestyle=":", linewidth=0.8)
    ax1.set_ylabel(r"gap $E_1 - E_0$")
    ax2.semilogy(h_d, np.maximum(element, 1e-18), "-")
    ax2.set_xlabel(r"hold point $h_d$")
    ax2.set_ylabel(r"$|\langle E_0|\sigma_1^z|E_1\rangle|$")
    _save(fig, path)


def entropy_figure(times, entropy, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(times, entropy, "-")
    ax.set_xlabel(r"time ($\mu$s)")
    ax.set_ylabel("entanglement entropy")
    _save(fig, path)


def sweep_survival_figure(h_d, survival, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(h_d, survival, "o-")
    ax.set_xlabel(r"hold point $h_d$")
    ax.set_ylabel("survival probability")
    _save(fig, path)


def sweep_t1_figure(h_d, t1_values, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(h_d, t1_values, "o-")
    ax.set_xlabel(r"hold point $h_d$")
    ax.set_ylabel(r"$T_1$ ($\mu$s)")
    _save(fig, path)


def perturbation_scaling_figure(lambdas, elem_4q, elem_1q, slope_4q, slope_1q, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(lambdas, elem_4q, "o-", label=f"4-qubit (slope {slope_4q:.2f})")
    ax.loglog(lambdas, elem_1q, "s-", label=f"single qubit (slope {slope_1q:.2f})")
    ax.set_xlabel(r"$\lambda = 1 - k$")
    ax.set_ylabel(r"$|\langle E_0|\sigma^z|E_1\rangle|$")
    ax.legend()
    _save(fig, path)
