"""Figure rendering for experiment results (standalone SVG 1.1 files).

Plots are deliberately minimal — a heatmap for grid sweeps, a log-log line
for the qubit-number scaling, plain line plots for time series, and a
parametric input-output curve for the hysteresis loop.  All figures render
headlessly through the Agg backend and are written with matplotlib's SVG
writer, which emits standalone SVG 1.1 documents.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fitting import PowerLawFit

__all__ = [
    "heatmap_figure",
    "loglog_figure",
    "series_figure",
    "parametric_figure",
    "save_svg",
]


def save_svg(fig, path: str) -> None:
    """Write the figure as standalone SVG and release it."""
    fig.savefig(path, format="svg")
    plt.close(fig)


def heatmap_figure(
    x: Sequence[float],
    y: Sequence[float],
    z: np.ndarray,
    *,
    xlabel: str,
    ylabel: str,
    zlabel: str = "N_D [1]",
    title: str = "",
):
    """Grid values as a colored map; NaN cells (failures) render blank."""
    fig, ax = plt.subplots(figsize=(6.0, 4.8))
    zm = np.ma.masked_invalid(np.asarray(z, dtype=float))
    mesh = ax.pcolormesh(np.asarray(x), np.asarray(y), zm.T, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=zlabel)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def loglog_figure(
    ns: Sequence[float],
    values: Sequence[float],
    fit: Optional[PowerLawFit] = None,
    *,
    xlabel: str = "n qubits [1]",
    ylabel: str = "N_D [1]",
):
    """Scaling points on log-log axes with the fitted power law overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 4.8))
    ns = np.asarray(ns, dtype=float)
    ax.loglog(ns, np.asarray(values, dtype=float), "o", label="measured")
    if fit is not None:
        grid = np.linspace(ns.min(), ns.max(), 64)
        ax.loglog(
            grid,
            np.exp(fit.log_prefactor) * grid**fit.k,
            "-",
            label=f"n^{fit.k:.3f} (R^2={fit.r_squared:.4f})",
        )
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    return fig


def series_figure(
    t: Sequence[float],
    named_series: Mapping[str, Sequence[float]],
    *,
    xlabel: str = "t [1/omega_R]",
    ylabel: str = "",
    title: str = "",
    marks: Sequence[float] = (),
):
    """Time series on shared axes; ``marks`` draws vertical guide lines."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    t = np.asarray(t, dtype=float)
    for name, series in named_series.items():
        ax.plot(t, np.asarray(series, dtype=float), label=name, linewidth=1.0)
    for mark in marks:
        ax.axvline(mark, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(named_series) > 1:
        ax.legend()
    fig.tight_layout()
    return fig


def parametric_figure(
    i_series: Sequence[float],
    o_series: Sequence[float],
    *,
    xlabel: str = "I [1]",
    ylabel: str = "O [1]",
    title: str = "",
):
    """Input-output loop; the origin is marked to show the pinch point."""
    fig, ax = plt.subplots(figsize=(5.2, 4.8))
    ax.plot(
        np.asarray(i_series, dtype=float),
        np.asarray(o_series, dtype=float),
        linewidth=1.0,
    )
    ax.plot([0.0], [0.0], "k+", markersize=10)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.axhline(0.0, color="gray", linewidth=0.5)
    ax.axvline(0.0, color="gray", linewidth=0.5)
    fig.tight_layout()
    return fig
