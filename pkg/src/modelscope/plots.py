"""Static SVG plots rendered from the exported JSON.

These are the non-interactive equivalents of the browser views and consume
the exact same dictionaries, so a static figure can never disagree with the
explorer.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _model_color(mask: int) -> str:
    """Stable per-model color from a hash of the mask."""
    digest = hashlib.sha256(str(int(mask)).encode()).digest()
    hue = digest[0] / 255.0
    return matplotlib.colors.hsv_to_rgb((hue, 0.75, 0.85))


def render_lvk(vis: dict, highlight: str | None = None):
    names = vis["dataset"]["names"]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    rng = np.random.default_rng(0)
    for block in vis["original_table"]:
        for m in block["models"]:
            contains = highlight in m["variables"] if highlight else False
            x = block["size"] + rng.uniform(-0.15, 0.15)
            ax.scatter(x, m["q_hat"], s=12,
                       marker="^" if contains else "o",
                       color="#d62728" if contains else "#1f77b4", alpha=0.6)
    ax.set_xlabel("Number of parameters")
    ax.set_ylabel("-2*Log-likelihood")
    title = "Description loss against model size"
    if highlight:
        title += f" (highlight: {highlight})"
    ax.set_title(title)
    fig.tight_layout()
    return fig


def render_boot(vis: dict, highlight: str | None = None, max_area: float = 900.0):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for block in vis["stability"]:
        for m in block["models"]:
            contains = highlight in m["variables"] if highlight else False
            area = max_area * m["prob"]
            ax.scatter(block["size"], -2.0 * m["loglik"], s=max(area, 4.0),
                       color="#d62728" if contains else "#1f77b4",
                       alpha=0.55, edgecolors="none")
    ax.set_xlabel("Number of parameters")
    ax.set_ylabel("-2*Log-likelihood")
    ax.set_title("Bootstrapped model stability (area = selection probability)")
    fig.tight_layout()
    return fig


def render_vip(vis: dict):
    names = vis["dataset"]["names"]
    grid = np.asarray(vis["lambda_grid"])
    incl = np.asarray(vis["inclusion"])
    n = vis["dataset"]["n"]
    rv_index = vis["dataset"].get("rv_index")
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for rank, j in enumerate(vis["legend_order"]):
        style = dict(lw=1.6)
        if rv_index is not None and j == rv_index:
            style.update(color="black", ls="--", lw=2.0)
        ax.plot(grid, incl[j], label=names[j], **style)
    for lam, label in ((2.0, "AIC"), (float(np.log(n)), "BIC")):
        ax.axvline(lam, color="grey", lw=0.8, ls=":")
        ax.text(lam, 1.02, label, ha="center", fontsize=8, color="grey")
    ax.set_xlabel("Penalty multiplier")
    ax.set_ylabel("Bootstrap inclusion probability")
    ax.set_ylim(-0.02, 1.08)
    ax.legend(fontsize=7, loc="center left", bbox_to_anchor=(1.0, 0.5))
    fig.tight_layout()
    return fig


def render_af(af: dict, best_only: bool = True):
    key = "best_only_true" if best_only else "best_only_false"
    curve = af["curves"][key]
    grid = np.asarray(af["c_grid"])
    p_star = np.asarray(curve["p_star"])
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    seen = {}
    for i, mask in enumerate(curve["argmax_mask"]):
        if mask < 0:
            continue
        label = curve["argmax_formula"][i]
        color = _model_color(mask)
        show = label not in seen
        seen[label] = True
        ax.scatter(grid[i], p_star[i], color=color, s=22, label=label if show else None)
    ax.plot(grid, p_star, color="#bbbbbb", lw=0.8, zorder=0)
    if curve.get("c_star") is not None:
        ax.axvline(curve["c_star"], color="grey", ls=":", lw=1.0)
    ax.set_xlabel("c")
    ax.set_ylabel("p*")
    ax.set_title(f"Adaptive fence (best only = {best_only})")
    if len(seen) <= 14:
        ax.legend(fontsize=7, loc="center left", bbox_to_anchor=(1.0, 0.5))
    fig.tight_layout()
    return fig


def save_svg(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def export_plots(payload: dict, out_dir, highlight: str | None = None, best_only: bool = True):
    """Write the standard SVG set for a vis/af payload; returns written paths."""
    out_dir = Path(out_dir)
    written = []
    if payload["kind"] == "vis":
        written.append(save_svg(render_lvk(payload, highlight), out_dir / "lvk.svg"))
        written.append(save_svg(render_boot(payload, highlight), out_dir / "boot.svg"))
        written.append(save_svg(render_vip(payload), out_dir / "vip.svg"))
    else:
        written.append(save_svg(render_af(payload, best_only), out_dir / "af.svg"))
        written.append(save_svg(render_af(payload, not best_only),
                                out_dir / f"af_best_only_{str(not best_only).lower()}.svg"))
    return written
