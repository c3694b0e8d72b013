"""Matplotlib rendering of curves, fits, and balance traces.

Report-path companions to the CSV exports: each CLI subcommand can drop
a rendered PNG next to its delimited output. Uses the Agg backend so
rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .balance_sim import BalanceTrace
from .fitting import PhaseSegment, TimeSeries
from .model_core import FlowCurve, flow_values
from .ode_engine import Trajectory

__all__ = ["flow_figure", "fit_figure", "balance_figure", "save_figure"]

_PHASE_COLORS = {
    "background": "#d9d9d9",
    "rise": "#c6dbef",
    "saturation": "#9ecae1",
    "decline": "#fdd0a2",
    "stabilized": "#e5f5e0",
}


def _draw_markers(ax, curve: FlowCurve) -> None:
    ax.axhline(curve.u_s, color="tab:red", lw=0.8, ls="--", label="saturation level")
    ax.axhline(curve.v_s, color="tab:green", lw=0.8, ls="--", label="background level")
    ax.axvline(curve.params.lam, color="tab:gray", lw=0.8, ls=":", label="topic end")
    if curve.t_inf is not None:
        ax.axvline(curve.t_inf, color="tab:purple", lw=0.8, ls=":", label="inflection")


def flow_figure(
    curve: FlowCurve,
    grid=None,
    trajectory: Trajectory | None = None,
    markers: bool = True,
):
    """Composite curve over a time grid, optionally with an integrator
    trajectory overlaid for comparison."""
    if grid is None:
        lam = curve.params.lam
        grid = np.linspace(3.0 * lam / 600, 3.0 * lam, 600)
    grid = np.asarray(grid, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(grid, flow_values(curve.params, grid), color="tab:blue", label="flow model")
    if trajectory is not None:
        ax.plot(
            trajectory.times,
            trajectory.values,
            color="tab:orange",
            lw=0.8,
            ls="--",
            label="integrated",
        )
    if markers:
        _draw_markers(ax, curve)
    ax.set_xlabel("time")
    ax.set_ylabel("publications per time unit")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def fit_figure(
    series: TimeSeries,
    curve: FlowCurve,
    segments: list[PhaseSegment] | None = None,
):
    """Observed counts (as intensity) with the fitted curve and phases."""
    gaps = np.diff(series.times)
    gaps = gaps[gaps > 0]
    dt = float(np.median(gaps)) if gaps.size else 1.0
    fig, ax = plt.subplots(figsize=(7, 4))
    if segments:
        for seg in segments:
            ax.axvspan(
                seg.t_start,
                seg.t_end,
                color=_PHASE_COLORS.get(seg.label.value, "#eeeeee"),
                alpha=0.6,
                lw=0,
            )
    ax.plot(
        series.times,
        series.counts / dt,
        ".",
        ms=3,
        color="tab:gray",
        label="observed intensity",
    )
    dense = np.linspace(float(series.times[0]), float(series.times[-1]), 600)
    ax.plot(dense, flow_values(curve.params, dense), color="tab:blue", label="fitted curve")
    _draw_markers(ax, curve)
    ax.set_xlabel("time")
    ax.set_ylabel("publications per time unit")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def balance_figure(trace: BalanceTrace):
    """Stacked allocation of the capacity between background and topics."""
    fig, ax = plt.subplots(figsize=(7, 4))
    stack = [trace.background] + [trace.per_topic[i] for i in range(trace.n_topics)]
    labels = ["background"] + [f"topic {i}" for i in range(trace.n_topics)]
    ax.stackplot(trace.times, stack, labels=labels, alpha=0.85)
    if np.any(trace.saturated):
        first = trace.times[trace.saturated]
        ax.plot(
            first,
            np.full(first.size, trace.capacity),
            "|",
            color="tab:red",
            label="contended",
        )
    ax.axhline(trace.capacity, color="black", lw=0.8, ls="--")
    ax.set_xlabel("time")
    ax.set_ylabel("publications per time unit")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def save_figure(fig, path, dpi: int = 150) -> str:
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return str(path)
