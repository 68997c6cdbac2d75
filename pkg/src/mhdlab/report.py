"""Delimited output and rendered figures for experiment runs."""

from __future__ import annotations

import csv
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import energy_residuals

__all__ = [
    "series_columns",
    "write_series_csv",
    "read_series_csv",
    "decay_figure",
    "energy_figure",
    "xnorm_figure",
    "kernel_bounds_figure",
    "lemma_figure",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def series_columns(report) -> list[str]:
    keys = report.keys()
    return ["t"] + keys + [f"raw_{k}" for k in keys] + ["E", "residual"]


def write_series_csv(path, times, reports, energy, dissipation) -> None:
    """Time-series table: t, weighted components, raw components, E, residual.

    Rows are written as single complete lines (no torn rows on interruption).
    """
    if not reports:
        raise ValueError("nothing to write: no recorded reports")
    keys = reports[0].keys()
    residuals = energy_residuals(times, energy, dissipation)
    header = ",".join(series_columns(reports[0]))
    with open(path, "w", buffering=1) as fh:
        fh.write(header + "\n")
        for i, rep in enumerate(reports):
            vals = [times[i]]
            vals += [rep.weighted(k) for k in keys]
            vals += [rep.raw(k) for k in keys]
            vals += [energy[i], residuals[i]]
            fh.write(",".join(_fmt(v) for v in vals) + "\n")
            fh.flush()


def read_series_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {name: np.array([float(r[j]) for r in data]) for j, name in enumerate(header)}
    return cols


_DECAY_STYLE = {
    "raw_u_linf": ("tab:blue", "|u| sup"),
    "raw_v_linf": ("tab:orange", "|v| sup"),
    "raw_psi_linf": ("tab:green", "|psi| sup"),
    "raw_p_linf": ("tab:red", "|P| sup"),
}


def decay_figure(path, cols, fits=None, window=None) -> None:
    """Log-log sup-norm histories with fitted slopes overlaid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    t = cols["t"]
    for key, (color, label) in _DECAY_STYLE.items():
        if key not in cols:
            continue
        y = cols[key]
        mask = (t > 0) & (y > 0)
        if not np.any(mask):
            continue
        ax.loglog(t[mask], y[mask], color=color, lw=1.2, label=label)
        fit = (fits or {}).get(key)
        if fit is not None and not isinstance(fit, str):
            lo, hi = fit.window
            ts = np.geomspace(max(lo, t[mask].min()), min(hi, t[mask].max()), 32)
            ax.loglog(
                ts,
                np.exp(fit.intercept) * ts**fit.exponent,
                color=color,
                ls="--",
                lw=1.0,
                label=f"{label}: t^{fit.exponent:.2f}",
            )
    if window is not None:
        ax.axvspan(window[0], window[1], color="0.92", zorder=0)
    ax.set_xlabel("t")
    ax.set_ylabel("sup norm")
    ax.legend(fontsize=8, ncol=2)
    ax.set_title("sup-norm decay")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def energy_figure(path, cols) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.4), sharex=True)
    t = cols["t"]
    ax1.semilogy(t, np.maximum(cols["E"], 1e-300), color="tab:blue")
    ax1.set_ylabel("E")
    ax1.set_title("energy and balance defect")
    res = np.abs(cols["residual"])
    ok = np.isfinite(res) & (res > 0)
    if np.any(ok):
        ax2.semilogy(t[ok], res[ok], color="tab:red", lw=1.0)
    ax2.set_ylabel("|residual|")
    ax2.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def xnorm_figure(path, cols, reports) -> None:
    """Weighted primary-norm components against time."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    t = cols["t"]
    x_keys = [k for k, c in reports[0].components.items() if c.family == "x"]
    for key in x_keys:
        y = cols[key]
        mask = y > 0
        if np.any(mask):
            ax.semilogy(t[mask], y[mask], lw=1.0, label=key)
    ax.set_xlabel("t")
    ax.set_ylabel("weighted component")
    ax.legend(fontsize=7, ncol=2)
    ax.set_title("time-weighted norm components")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def kernel_bounds_figure(path, report) -> None:
    """Bound ratios by family; the dashed line marks ratio one."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for fam in sorted(report.families, key=lambda f: f.name):
        order = np.argsort(fam.t)
        ax.plot(fam.t[order], fam.ratio[order], ".", ms=2, label=fam.name)
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("|value| / bound")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=7)
    ax.set_title("kernel bound ratios")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def lemma_figure(path, sigmas, ratios) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.plot(sigmas, ratios, "o-")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("dilation")
    ax.set_ylabel("measured ratio")
    ax.set_title("mixed-Riesz bound: measured constants")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
