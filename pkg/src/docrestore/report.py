"""Figure rendering for the report paths: metric bars and loss curves."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricsReport


def render_metrics_figure(rep: MetricsReport, path):
    """Per-image bars for each metric with the average drawn as a line."""
    names = [r.image for r in rep.rows]
    panels = [
        ("FM (%)", [r.fm for r in rep.rows], rep.avg_fm),
        ("F_ps (%)", [r.fps for r in rep.rows], rep.avg_fps),
        ("PSNR (dB)", [r.psnr for r in rep.rows], rep.avg_psnr),
        ("DRD", [r.drd for r in rep.rows], rep.avg_drd),
    ]
    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    for ax, (title, values, avg) in zip(axes.ravel(), panels):
        ax.bar(range(len(values)), values, color="#4878a8")
        ax.axhline(avg, color="#b03030", linestyle="--", linewidth=1,
                   label=f"average {avg:.3f}")
        ax.set_title(title)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_loss_figure(curve, path, title="training loss"):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(range(len(curve)), curve, marker="o", color="#4878a8")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean DSSIM")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
