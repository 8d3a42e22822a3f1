"""Matplotlib figure rendering for the report and benchmark paths."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_convergence_plot", "save_psnr_time_plot", "save_image_png"]


def save_convergence_plot(report, path, title: str = "") -> None:
    """Relative change and residual per epoch on a log scale."""
    epochs = np.arange(1, report.epochs_run + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(epochs, report.rel_change_history, label="relative change")
    ax.semilogy(epochs, report.residual_history, label="residual")
    ax.set_xlabel("epoch")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_psnr_time_plot(traces: dict, path, title: str = "") -> None:
    """PSNR versus cumulative computation time, one curve per algorithm."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (seconds, psnrs) in traces.items():
        ax.plot(seconds, psnrs, label=label)
    ax.set_xlabel("computation time (s)")
    ax.set_ylabel("PSNR (dB)")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_image_png(image: np.ndarray, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4, 4))
    im = ax.imshow(np.asarray(image), cmap="viridis")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
