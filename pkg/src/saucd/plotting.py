"""Figure rendering for the CLI report paths. Every plot goes straight
to a file via the Agg backend; no interactive windows."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metric import WEIGHT_KNOT_FREQS
from .spectral import Spectrum

__all__ = [
    "save_spectrum_plot",
    "save_comparison_plot",
    "save_weights_plot",
    "save_correlation_plot",
]


def save_spectrum_plot(spectrum: Spectrum, path, title: str = "Mesh spectrum") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(spectrum.freqs, spectrum.amps, lw=1.0, color="tab:blue")
    ax.set_xlabel(r"frequency $\lambda$")
    ax.set_ylabel("amplitude")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_comparison_plot(
    spec_test: Spectrum,
    spec_gt: Spectrum,
    path,
    distance: float | None = None,
) -> None:
    """Both spectrum curves with the non-overlapping region shaded."""
    merged = np.sort(np.concatenate([spec_test.freqs, spec_gt.freqs]))
    f_test = np.interp(merged, spec_test.freqs, spec_test.amps)
    f_gt = np.interp(merged, spec_gt.freqs, spec_gt.amps)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(merged, f_test, lw=1.0, color="tab:blue", label="test")
    ax.plot(merged, f_gt, lw=1.0, color="tab:red", label="ground truth")
    ax.fill_between(merged, f_test, f_gt, color="tab:purple", alpha=0.3)
    ax.set_xlabel(r"frequency $\lambda$")
    ax.set_ylabel("amplitude")
    title = "Spectrum AUC difference"
    if distance is not None:
        title += f" = {distance:.6g}"
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_weights_plot(fold_weights, average, path) -> None:
    """Per-fold weight curves (thin, labeled by held-out object) with the
    fold average in bold."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, weights in fold_weights:
        ax.plot(WEIGHT_KNOT_FREQS, weights.values, lw=0.8, alpha=0.7, label=str(label))
    ax.plot(
        WEIGHT_KNOT_FREQS, average.values, lw=2.5, color="purple", label="average"
    )
    ax.set_xlabel(r"frequency $\lambda$")
    ax.set_ylabel("weight")
    ax.set_title("Learned spectrum weights")
    if len(fold_weights) <= 12:
        ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_correlation_plot(reports, path) -> None:
    """Grouped bars of the overall PLCC/SROCC/KROCC per metric."""
    names = [r.metric_name for r in reports]
    overall = np.array([r.overall for r in reports])
    x = np.arange(len(names))
    width = 0.25
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 4))
    for k, (label, color) in enumerate(
        [("PLCC", "tab:red"), ("SROCC", "tab:blue"), ("KROCC", "tab:cyan")]
    ):
        ax.bar(x + (k - 1) * width, overall[:, k], width, label=label, color=color)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("overall correlation")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
