"""Static figures for the CLI; always rendered off-screen to image files."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CLASS_COLORS = {"ego_car": "tab:red", "npc_car": "tab:blue", "bicycle": "tab:green", "pedestrian": "tab:purple",
                "traffic_cone": "tab:orange"}


def plot_scene(topo, trajectories, path, classes=None):
    """Lane outlines with every object's path; the ego is drawn last."""
    fig, ax = plt.subplots(figsize=(7, 7))
    for lane in topo.lane_list:
        geom = lane.polygon()
        polys = getattr(geom, "geoms", [geom])
        for poly in polys:
            x, y = poly.exterior.xy
            ax.fill(x, y, color="0.9", lw=0)
            ax.plot(x, y, color="0.75", lw=0.4)
    for tr in sorted(trajectories, key=lambda tr: -tr.object_index):
        cls = (classes or {}).get(tr.object_index, "ego_car" if tr.object_index == 0 else "npc_car")
        c = CLASS_COLORS.get(cls, "k")
        if tr.moving:
            ax.plot(tr.xy[:, 0], tr.xy[:, 1], color=c, lw=1.5 if tr.object_index == 0 else 1.0)
        ax.plot(*tr.xy[0], "o", color=c, ms=4)
        ax.annotate(str(tr.object_index), tr.xy[0], fontsize=7, xytext=(3, 3), textcoords="offset points")
    ax.set_aspect("equal")
    ax.set_title(topo.ref)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_report(report, out_dir):
    """Per-scene T and D histograms plus reproduced interactions by type."""
    os.makedirs(out_dir, exist_ok=True)
    Ts = [s.T for s in report.scenes if s.T is not None]
    Ds = [s.D for s in report.scenes if s.D is not None]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, vals, name in ((axes[0], Ts, "T: trajectory discrepancy [m]"), (axes[1], Ds, "D: interaction distance [m²]")):
        if vals:
            ax.hist(vals, bins=min(30, max(5, len(vals) // 10)), color="tab:blue")
        ax.set_xlabel(name)
        ax.set_ylabel("scenes")
    fig.tight_layout()
    paths = [os.path.join(out_dir, "metrics_hist.png")]
    fig.savefig(paths[0], dpi=120)
    plt.close(fig)

    ok, total = {}, {}
    for s in report.scenes:
        for d in s.details:
            if d.get("kind") == "interaction":
                total[d["type"]] = total.get(d["type"], 0) + 1
                ok[d["type"]] = ok.get(d["type"], 0) + int(d["matched"] and not d["voided"])
    types = sorted(total)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    x = np.arange(len(types))
    ax.bar(x, [total[t] for t in types], color="0.8", label="ground truth")
    ax.bar(x, [ok[t] for t in types], color="tab:green", width=0.5, label="reproduced")
    ax.set_xticks(x, types)
    ax.set_ylabel("interactions")
    ax.legend(fontsize=8)
    fig.tight_layout()
    paths.append(os.path.join(out_dir, "success_by_type.png"))
    fig.savefig(paths[1], dpi=120)
    plt.close(fig)
    return paths
