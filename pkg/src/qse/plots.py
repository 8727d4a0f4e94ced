"""Figure rendering for the CLI report paths.

All figures are rendered with the Agg backend at fixed size, dpi, and PNG
metadata, so a given input produces byte-identical image files run after run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimation import OptimalStrategy
from .models import PriorDensity
from .multiparam import MultiBoundReport
from .multishot import Trajectory

__all__ = [
    "plot_strategy",
    "plot_level_estimates",
    "plot_gains",
    "plot_trajectories",
    "plot_error_vs_shots",
    "plot_multi_bound",
]

_FIGSIZE = (6.0, 3.8)
_DPI = 110
_META = {"Software": "qse"}


def _new_axes():
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", metadata=_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_strategy(prior: PriorDensity, strat: OptimalStrategy, path: str | Path) -> Path:
    """Prior density over the parameter with the optimal estimates marked."""
    fig, ax = _new_axes()
    ax.plot(prior.grid.nodes, prior.values, color="C0", label="prior density")
    for k, est in enumerate(strat.estimates):
        ax.axvline(est, color="C3", ls="--", lw=1.0,
                   label="optimal estimates" if k == 0 else None)
    ax.set_xscale("log")
    ax.set_xlabel("parameter")
    ax.set_ylabel("density")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_level_estimates(
    energies: Sequence[float], estimates: Sequence[float], path: str | Path
) -> Path:
    """Temperature estimate reported for each measured energy level."""
    fig, ax = _new_axes()
    ax.plot(list(energies), list(estimates), "o-", color="C0")
    ax.set_xlabel("measured energy")
    ax.set_ylabel("temperature estimate")
    ax.set_yscale("log")
    return _save(fig, path)


def plot_gains(k: float, j: float, classification: str, path: str | Path) -> Path:
    """Information gain of the measurement vs the optimal gain."""
    fig, ax = _new_axes()
    ax.bar(["K (this POM)", "J (optimal)"], [k, j], color=["C0", "C2"])
    ax.set_ylabel("information gain")
    ax.set_title(f"classification: {classification}")
    return _save(fig, path)


def plot_trajectories(
    trajectories: Sequence[Trajectory], path: str | Path, max_shown: int = 20
) -> Path:
    """Running estimates per shot for the first few trajectories."""
    fig, ax = _new_axes()
    for tr in trajectories[:max_shown]:
        ax.plot(range(1, len(tr.estimates) + 1), tr.estimates, color="C0", alpha=0.4, lw=1.0)
    if trajectories:
        ax.axhline(trajectories[0].true_theta, color="C3", ls="--", label="true value")
        ax.legend(loc="best")
    ax.set_xlabel("shot")
    ax.set_ylabel("estimate")
    ax.set_yscale("log")
    return _save(fig, path)


def plot_error_vs_shots(
    errors: Sequence[float], epsilon_min: float | None, path: str | Path
) -> Path:
    """Exact repeated-measurement error against the number of shots."""
    fig, ax = _new_axes()
    shots = np.arange(1, len(errors) + 1)
    ax.plot(shots, list(errors), "o-", color="C0", label="exact error")
    if epsilon_min is not None:
        ax.axhline(epsilon_min, color="C3", ls="--", label="single-shot minimum")
    ax.set_xlabel("shots")
    ax.set_ylabel("mean squared log error")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_multi_bound(report: MultiBoundReport, path: str | Path) -> Path:
    """Per-parameter bound terms and the commutator diagnostic."""
    fig, ax = _new_axes()
    labels = [f"param {i}" for i in range(len(report.per_parameter))]
    ax.bar(labels, report.per_parameter, color="C0")
    ax.axhline(report.bound, color="C2", ls="--", label="average bound")
    max_comm = max((n for _, _, n in report.commutator_norms), default=0.0)
    ax.set_title(f"saturable: {report.saturable} (max commutator {max_comm:.2e})")
    ax.set_ylabel("bound term")
    ax.legend(loc="best")
    return _save(fig, path)
