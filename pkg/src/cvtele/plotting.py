"""Matplotlib figures written next to the delimited report output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import CLASSICAL_LIMIT, NO_CLONING_LIMIT  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
}


def _new(width=4.5, height=3.0):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_levels(report, path) -> Path:
    """Bar chart of every dB level in a report, with target markers."""
    entries = [e for e in report.entries if e.db is not None and not e.name.startswith("mc.")]
    fig, ax = _new(max(4.5, 0.45 * len(entries) + 1.5))
    xs = range(len(entries))
    colors = ["tab:blue" if e.db_ref == 0.25 else "tab:orange" for e in entries]
    ax.bar(xs, [e.db for e in entries], color=colors, width=0.6)
    for i, e in enumerate(entries):
        if e.target is not None and e.scale == "db":
            ax.errorbar(i, e.target, yerr=e.tolerance or 0, fmt="k_", ms=14, capsize=3)
    ax.axhline(0, color="k", lw=0.6)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([e.name for e in entries], rotation=45, ha="right")
    ax.set_ylabel("noise level relative to vacuum (dB)")
    ax.set_title(report.name)
    return _save(fig, path)


def render_sweep(param, values, reports, path, quantity="F_c") -> Path:
    """One quantity against the swept parameter, with the 1/2 and 2/3 fidelity limits."""
    ys = [r[quantity].linear for r in reports]
    fig, ax = _new()
    ax.plot(values, ys, "o-", color="tab:blue", label=quantity)
    if quantity.startswith("F_c"):
        ax.axhline(CLASSICAL_LIMIT, color="0.5", ls="--", lw=0.8, label="classical limit")
        ax.axhline(NO_CLONING_LIMIT, color="tab:red", ls="--", lw=0.8, label="no-cloning limit")
        ax.set_ylim(0, 1.05)
    ax.set_xlabel(param)
    ax.set_ylabel(quantity)
    ax.legend(frameon=False)
    return _save(fig, path)
