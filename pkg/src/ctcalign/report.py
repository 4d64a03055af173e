"""Figure rendering for the CLI report paths.

Every figure lands next to the delimited output it visualizes:
accuracy-vs-confidence curves for evaluation runs, kept-sample bars for
threshold sweeps, and per-letter compression summaries.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def render_confidence_curve(buckets, out_path) -> None:
    """Line accuracy against confidence bucket midpoints."""
    xs = [(b["bucket_low"] + b["bucket_high"]) / 2
          for b in buckets if b["count"]]
    ys = [b["line_accuracy"] for b in buckets if b["count"]]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel("confidence")
    ax.set_ylabel("line accuracy")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_threshold_sweep(rows, out_path) -> None:
    """Kept training lines per confidence threshold."""
    xs = [row["threshold"] for row in rows]
    ys = [row["kept_count"] for row in rows]
    width = 0.8 * min(
        (b - a for a, b in zip(xs, xs[1:])), default=0.1
    )
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.bar(xs, ys, width=width, align="center")
    ax.set_xlabel("confidence threshold")
    ax.set_ylabel("kept lines")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_compression_report(rows, out_path) -> None:
    """Compression ratio per letter."""
    labels = [row["letter_id"] for row in rows]
    ratios = [row["ratio"] for row in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(labels)), 3.2))
    ax.bar(range(len(labels)), ratios)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("compression ratio")
    ax.axhline(1.0, color="gray", linewidth=0.8)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def write_csv(rows, fieldnames, out_path) -> None:
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
