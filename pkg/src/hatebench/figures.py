"""Self-contained SVG figures: corpus overview, confusion heatmap, training curves."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KWARGS = {"format": "svg", "metadata": {"Date": None}}  # keep output reproducible


def eda_figure(stats, path: str | Path) -> None:
    """Three panels: HS distribution, abusive distribution, tweet-length histogram."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))

    for ax, counts, title in (
        (axes[0], stats.hs_counts, "HS label"),
        (axes[1], stats.abusive_counts, "Abusive label"),
    ):
        ax.bar(["0", "1"], counts, color=["#4878d0", "#d65f5f"])
        for x, c in enumerate(counts):
            ax.text(x, c, f"{c:,}", ha="center", va="bottom", fontsize=9)
        ax.set_title(title)
        ax.set_ylabel("tweets")

    words = list(stats.length_histogram)
    freqs = [stats.length_histogram[w] for w in words]
    axes[2].bar(words, freqs, width=1.0, color="#6acc64")
    axes[2].axvline(stats.mean_length, color="black", linestyle="--", linewidth=1,
                    label=f"mean {stats.mean_length:.1f}")
    axes[2].set_title("Tweet length (words)")
    axes[2].set_xlabel("words")
    axes[2].set_ylabel("tweets")
    axes[2].legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def confusion_figure(cm, task: str, path: str | Path) -> None:
    """2x2 heatmap with counts; rows are true labels, columns predictions."""
    grid = [[cm.tn, cm.fp], [cm.fn, cm.tp]]
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    im = ax.imshow(grid, cmap="Blues")
    vmax = max(max(row) for row in grid) or 1
    for i in range(2):
        for j in range(2):
            color = "white" if grid[i][j] > 0.6 * vmax else "black"
            ax.text(j, i, f"{grid[i][j]:,}", ha="center", va="center", color=color)
    ax.set_xticks([0, 1], ["pred 0", "pred 1"])
    ax.set_yticks([0, 1], ["true 0", "true 1"])
    ax.set_title(f"Confusion ({task})")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def curves_figure(curves: list[dict], path: str | Path) -> None:
    """Two panels over epochs: loss and AUC, each with train/validation lines."""
    import math

    def series(key):
        return [math.nan if row.get(key) is None else row[key] for row in curves]

    epochs = [row["epoch"] for row in curves]
    fig, (ax_loss, ax_auc) = plt.subplots(1, 2, figsize=(9, 3.5))

    ax_loss.plot(epochs, series("train_loss"), marker="o", label="train")
    ax_loss.plot(epochs, series("val_loss"), marker="s", label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.set_title("Loss")
    ax_loss.legend(fontsize=8)

    if any(row.get("train_auc") is not None for row in curves):
        ax_auc.plot(epochs, series("train_auc"), marker="o", label="train")
        ax_auc.plot(epochs, series("val_auc"), marker="s", label="validation")
    ax_auc.set_xlabel("epoch")
    ax_auc.set_ylabel("AUC")
    ax_auc.set_title("AUC")
    ax_auc.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
