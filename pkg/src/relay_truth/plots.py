"""Render run outputs as matplotlib figures next to the CSV files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_LABELS = {
    "fig2": ("reported secrecy rate", "payoff", "VCG expected payoff"),
    "fig3": ("reported secrecy rate", "transfer payment", "VCG expected transfer"),
    "fig4": ("reported secrecy rate", "expected payoff", "AGV expected payoff"),
    "fig5": ("reported secrecy rate", "expected transfer", "AGV expected transfer"),
    "fig6": ("reported secrecy rate", "expected payoff", "AGV payoff vs K"),
    "fig7": ("reported secrecy rate", "expected transfer", "AGV transfer vs K"),
}


def render(report, path: Path) -> None:
    """Draw the figure matching a run report's CSV payload."""
    sub = report.subcommand
    fig, ax = plt.subplots(figsize=(7, 5))
    if sub in _LABELS:
        xlabel, ylabel, title = _LABELS[sub]
        series = defaultdict(list)
        for x, key, v in report.csv_rows:
            series[key].append((x, v))
        label_kind = "K" if sub in ("fig6", "fig7") else "R"
        for key in sorted(series):
            pts = np.asarray(series[key])
            ax.plot(pts[:, 0], pts[:, 1], label=f"{label_kind}{key}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend()
    elif sub in ("fig8", "optimal-k"):
        series = defaultdict(list)
        for k, rate, sample in report.csv_rows:
            series[sample].append((k, rate))
        for sample in sorted(series):
            pts = np.asarray(series[sample])
            ax.plot(pts[:, 0], pts[:, 1], marker="o", label=f"sample {sample}")
        ax.set_xlabel("number of selected relays K")
        ax.set_ylabel("system secrecy rate")
        ax.set_title("System secrecy rate vs K")
        ax.legend()
    elif sub == "fig3d":
        trues = sorted({row[0] for row in report.csv_rows})
        reps = sorted({row[1] for row in report.csv_rows})
        z = np.empty((len(trues), len(reps)))
        t_idx = {t: i for i, t in enumerate(trues)}
        r_idx = {r: j for j, r in enumerate(reps)}
        for t, r, v in report.csv_rows:
            z[t_idx[t], r_idx[r]] = v
        pcm = ax.pcolormesh(reps, trues, z, shading="auto")
        fig.colorbar(pcm, ax=ax, label="expected payoff")
        ax.set_xlabel("reported secrecy rate")
        ax.set_ylabel("true secrecy rate")
        ax.set_title("AGV expected payoff surface")
    else:
        raise ValueError(f"no figure defined for subcommand {sub!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
