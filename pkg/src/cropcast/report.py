"""Report rendering: CSV tables plus matplotlib figures, written to a directory.

The CLI's --report-dir paths land here. Figures use the Agg backend so
reports render identically on headless machines.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .forest import ClassificationMetrics
from .lstm import ForecastResult, TrainingHistory


def _ensure_dir(out_dir: str | Path) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def classification_report(metrics: ClassificationMetrics, out_dir: str | Path) -> list[Path]:
    """metrics.csv (one row per class) and an F1-by-class bar chart."""
    out = _ensure_dir(out_dir)
    total = sum(m.support for m in metrics.per_class.values())
    table = out / "metrics.csv"
    with table.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "precision", "recall", "f1", "support"])
        for name in sorted(metrics.per_class):
            m = metrics.per_class[name]
            writer.writerow([name, repr(m.precision), repr(m.recall), repr(m.f1), m.support])
        writer.writerow(["__accuracy__", repr(metrics.accuracy), "", "", total])

    labels = sorted(metrics.per_class)
    scores = [metrics.per_class[name].f1 for name in labels]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(labels)), 4.0))
    ax.bar(range(len(labels)), scores, color="#3a7d44")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("F1")
    ax.set_title(f"Per-class F1 (accuracy {metrics.accuracy:.3f})")
    fig.tight_layout()
    figure = out / "f1_by_class.png"
    fig.savefig(figure, dpi=120)
    plt.close(fig)
    return [table, figure]


def forecast_report(
    result: ForecastResult, out_dir: str | Path, recent: Sequence[float] | None = None
) -> list[Path]:
    """trajectory.csv and a line chart; recent observed prices, when given,
    are drawn before the forecast for context."""
    out = _ensure_dir(out_dir)
    table = out / "trajectory.csv"
    with table.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["month_ahead", "price"])
        for i, price in enumerate(result.trajectory, start=1):
            writer.writerow([i, repr(price)])

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    offset = 0
    if recent:
        xs = list(range(-len(recent) + 1, 1))
        ax.plot(xs, list(recent), marker="o", color="#555555", label="observed")
        offset = 1
    future = list(range(1, len(result.trajectory) + 1))
    ax.plot(future, list(result.trajectory), marker="o", color="#b3541e", label="forecast")
    if offset:
        ax.axvline(0.5, color="#999999", linestyle=":")
    ax.set_xlabel("months ahead")
    ax.set_ylabel("price (₹/kg)")
    ax.set_title(f"{result.crop}: {result.horizon_months}-month price forecast")
    ax.legend()
    fig.tight_layout()
    figure = out / "forecast.png"
    fig.savefig(figure, dpi=120)
    plt.close(fig)
    return [table, figure]


def training_report(history: TrainingHistory, crop: str, out_dir: str | Path) -> list[Path]:
    """history.csv (per-epoch losses) and the loss-curve figure."""
    out = _ensure_dir(out_dir)
    table = out / "history.csv"
    with table.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "best_val_so_far"])
        for i in range(history.epochs_run):
            writer.writerow(
                [
                    i + 1,
                    repr(history.train_loss[i]),
                    repr(history.val_loss[i]),
                    repr(history.best_so_far[i]),
                ]
            )

    epochs = list(range(1, history.epochs_run + 1))
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(epochs, history.train_loss, label="train")
    ax.plot(epochs, history.val_loss, label="validation")
    ax.axvline(history.best_epoch, color="#999999", linestyle=":", label="best epoch")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (normalized)")
    ax.set_yscale("log")
    ax.set_title(f"{crop}: training history")
    ax.legend()
    fig.tight_layout()
    figure = out / "loss.png"
    fig.savefig(figure, dpi=120)
    plt.close(fig)
    return [table, figure]
