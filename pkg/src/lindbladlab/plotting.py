"""Static figures written next to the CSV outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
}


def _new(width=6.0, ratio=0.62):
    fig, ax = plt.subplots(figsize=(width, width * ratio))
    return fig, ax


def plot_populations(results: dict, path, title: str = "") -> Path:
    with plt.rc_context(RC):
        fig, ax = _new()
        for name, traj in results.items():
            for i in range(traj.dim):
                ax.plot(traj.times, traj.population(i), label=f"{name} rho[{i},{i}]")
        ax.set_xlabel("t")
        ax.set_ylabel("population")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_distances(times, dists: dict, path) -> Path:
    with plt.rc_context(RC):
        fig, ax = _new()
        for key, d in dists.items():
            ax.semilogy(times, np.maximum(d, 1e-17), label=key)
        ax.set_xlabel("t")
        ax.set_ylabel("trace distance")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_fit(times, values, fit: dict, path) -> Path:
    with plt.rc_context(RC):
        fig, ax = _new()
        ax.semilogy(times, np.clip(values, 1e-300, None), label="observable")
        t0, t1 = fit["window"]
        t = np.linspace(t0, t1, 50)
        ax.semilogy(t, np.exp(fit["intercept"] - fit["rate"] * t), "--",
                    label=f"fit, rate {fit['rate']:.4g}")
        ax.set_xlabel("t")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
