"""Figures for simulation runs and sweep surfaces.

Everything renders off-screen. SVG output is made reproducible by fixing
the hash salt and dropping the date metadata.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .benchmark import INPUT_NAMES, INPUT_UNITS, OUTPUT_NAMES, OUTPUT_UNITS  # noqa: E402
from .errors import AllUnstable  # noqa: E402
from .sweep import argmin_j  # noqa: E402

plt.rcParams.update({
    "svg.hashsalt": "refrig-imc",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def _save(fig, path):
    path = str(path)
    meta = {"Date": None} if path.endswith(".svg") else {}
    if path.endswith(".png"):
        meta = {"Software": None}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_outputs(sims, labels, path):
    """Setpoints and outputs of both loops, one panel per output."""
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    t_min = sims[0].time / 60.0
    for i, ax in enumerate(axes):
        ax.plot(t_min, sims[0].r[i], "k--", lw=1, label="setpoint")
        for sim, lab in zip(sims, labels):
            ax.plot(sim.time / 60.0, sim.y[i], lw=1.2, label=lab)
        ax.set_ylabel(f"{OUTPUT_NAMES[i]} [{OUTPUT_UNITS[i]}]")
    axes[0].legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("time [min]")
    return _save(fig, path)


def plot_inputs(sims, labels, path):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for i, ax in enumerate(axes):
        for sim, lab in zip(sims, labels):
            ax.step(sim.time / 60.0, sim.u[i], where="post", lw=1.0, label=lab)
        ax.set_ylabel(f"{INPUT_NAMES[i]} [{INPUT_UNITS[i]}]")
    axes[0].legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("time [min]")
    return _save(fig, path)


def plot_surface(surface, name, path, log=False):
    """Heatmap of one index over the (lambda11, lambda22) grid."""
    z = surface.grid_values(name)
    z = np.where(np.isfinite(z), z, np.nan)
    if log:
        z = np.log10(z)
    l11 = np.asarray(surface.grid.lambda11)
    l22 = np.asarray(surface.grid.lambda22)
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(l22, l11, z, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=f"log10 {name}" if log else name)
    try:
        a, b, _ = argmin_j(surface)
        ax.plot([b], [a], "r+", ms=10, mew=2)
    except AllUnstable:
        pass
    ax.set_xlabel("lambda22 [s]")
    ax.set_ylabel("lambda11 [s]")
    ax.set_title(name)
    return _save(fig, path)
