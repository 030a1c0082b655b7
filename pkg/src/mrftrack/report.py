"""Figures rendered next to the delimited outputs.

A run gets a two-panel figure: failure stems per frame on top, the
per-frame mean distance to groundtruth below. A comparison gets mean
failures against joint sample count, with the independent baselines placed
at their compute-parity position (particles per target times target count).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import CompareReport, RunReport, mean_distance_series


def render_run_figure(report: RunReport, path) -> None:
    frames = [m.frame for m in report.metrics]
    fails = [m.failures for m in report.metrics]
    means = mean_distance_series(report.metrics)

    fig, (ax_f, ax_d) = plt.subplots(2, 1, sharex=True, figsize=(9.0, 6.0))
    ax_f.vlines(frames, 0, fails, color="firebrick", linewidth=1.2)
    ax_f.set_ylabel("failures")
    ax_f.set_ylim(bottom=0)
    ax_f.set_title(
        f"{report.tracker}: {report.total_failures} failures over {report.n_frames} frames"
    )
    ax_d.plot(frames, means, color="steelblue", linewidth=1.0)
    ax_d.set_xlabel("frame")
    ax_d.set_ylabel("mean distance (px)")
    ax_d.set_ylim(bottom=0)
    for ax in (ax_f, ax_d):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_compare_figure(report: CompareReport, path) -> None:
    mcmc = sorted(
        (s for s in report.summary if s["tracker"] == "mcmc-mrf"), key=lambda s: s["count"]
    )
    indep = sorted(
        (s for s in report.summary if s["tracker"] == "independent"), key=lambda s: s["count"]
    )

    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    if mcmc:
        ax.plot(
            [s["count"] for s in mcmc],
            [s["mean_failures"] for s in mcmc],
            marker="o",
            color="steelblue",
            label="joint MCMC (samples)",
        )
    if indep:
        ax.plot(
            [s["count"] * report.n_targets for s in indep],
            [s["mean_failures"] for s in indep],
            marker="s",
            linestyle="--",
            color="firebrick",
            label=f"independent ({report.n_targets} targets, per-target particles x {report.n_targets})",
        )
    ax.set_xscale("log")
    ax.set_xlabel("joint samples (compute parity)")
    ax.set_ylabel("mean failures per run")
    ax.set_ylim(bottom=0)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
