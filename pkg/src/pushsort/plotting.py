"""Matplotlib renderings: scene snapshots, reward traces and batch summaries."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np
import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Polygon, Rectangle

from .scene import Pose2, Scene

CLASS_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def draw_scene(ax, scene: Scene, poses: np.ndarray, title: str | None = None):
    xmin, ymin, xmax, ymax = scene.workspace
    ax.add_patch(Rectangle((xmin, ymin), xmax - xmin, ymax - ymin, fill=False, lw=1.0, ec="0.3"))
    for o in scene.obstacles:
        for part in o.shape.parts:
            ax.add_patch(Polygon(o.pose.transform(part), closed=True, fc="0.6", ec="0.4", lw=0.5))
    for k, m in enumerate(scene.movables):
        pose = Pose2(*poses[k + 1])
        color = CLASS_COLORS[m.class_id % len(CLASS_COLORS)]
        for part in m.shape.parts:
            ax.add_patch(Polygon(pose.transform(part), closed=True, fc=color, ec="k", lw=0.4))
    robot = Pose2(*poses[0])
    for part in scene.robot_shape.parts:
        ax.add_patch(Polygon(robot.transform(part), closed=True, fc="k", ec="k"))
    pad = 0.02 * (xmax - xmin)
    ax.set_xlim(xmin - pad, xmax + pad)
    ax.set_ylim(ymin - pad, ymax + pad)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=8)
    return ax


def snapshot_indices(steps: int, every: int) -> list[int]:
    """Every k-th step plus the final one: ceil(steps / k) + 1 frames."""
    idx = list(range(0, steps, every))
    idx.append(steps)
    return idx


def render_snapshots(record, scene: Scene, outdir, every: int, stem: str = "trajectory") -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for i in snapshot_indices(record.steps, every):
        entry = record.trajectory[i]
        fig, ax = plt.subplots(figsize=(3.2, 3.2))
        draw_scene(ax, scene, entry.poses, title=f"step {i}  g={entry.g:.3f}")
        path = outdir / f"{stem}_{i:04d}.svg"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def plot_reward_trace(record, path) -> Path:
    g = [s.g for s in record.trajectory]
    fig, ax = plt.subplots(figsize=(4.5, 2.6))
    ax.plot(range(len(g)), g, lw=1.2, color="k")
    contact = [i for i, s in enumerate(record.trajectory) if s.contacted]
    ax.plot(contact, [g[i] for i in contact], ".", ms=3, color=CLASS_COLORS[1], label="contact")
    ax.set_xlabel("step")
    ax.set_ylabel("g(x)")
    ax.set_yscale("symlog")
    ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_summaries(rows: Sequence[dict], path) -> Path:
    """Success rate bars with mean +/- stderr step counts, one group per CSV row."""
    labels = [f"{r['algo']}\n{r['objects']}o/{r['classes']}c p={r['noise_p']}" for r in rows]
    rate = [100.0 * float(r["success_rate"]) for r in rows]

    def num(v):
        try:
            return float(v)
        except (TypeError, ValueError):
            return math.nan

    steps = [num(r["steps_mean"]) for r in rows]
    err = [num(r["steps_stderr"]) for r in rows]
    x = np.arange(len(rows))
    fig, (a0, a1) = plt.subplots(1, 2, figsize=(max(5.0, 1.3 * len(rows) + 2.5), 3.0))
    a0.bar(x, rate, color="0.35")
    a0.set_ylim(0, 105)
    a0.set_ylabel("success [%]")
    a1.errorbar(x, steps, yerr=err, fmt="o", color="k", capsize=3)
    a1.set_ylabel("steps (successes)")
    for ax in (a0, a1):
        ax.set_xticks(x)
        ax.set_xticklabels(labels, fontsize=6)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
