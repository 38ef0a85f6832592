"""Report figures written next to the delimited CLI output."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_confusion_matrix(path, matrix: np.ndarray, classes: Sequence[str], title: str = "") -> None:
    plt = _pyplot()
    n = len(classes)
    size = max(4.0, 0.35 * n + 2.0)
    fig, ax = plt.subplots(figsize=(size, size))
    im = ax.imshow(matrix, cmap="Blues", interpolation="nearest")
    ax.set_xticks(range(n))
    ax.set_yticks(range(n))
    ax.set_xticklabels(classes, rotation=90, fontsize=7)
    ax.set_yticklabels(classes, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    if title:
        ax.set_title(title)
    peak = matrix.max() if matrix.size else 0
    for i, j in zip(*np.nonzero(matrix)):
        ax.text(j, i, str(matrix[i, j]), ha="center", va="center", fontsize=6,
                color="white" if matrix[i, j] > peak / 2 else "black")
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_dmi(path, values: np.ndarray, roi=None, title: str = "") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(values, cmap="gray", interpolation="nearest")
    if roi is not None and len(roi) == 4 and values.shape != (roi[3] - roi[1] + 1, roi[2] - roi[0] + 1):
        from matplotlib.patches import Rectangle

        x0, y0, x1, y1 = roi
        ax.add_patch(Rectangle((x0 - 0.5, y0 - 0.5), x1 - x0 + 1, y1 - y0 + 1,
                               fill=False, edgecolor="red", linewidth=1))
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_glyph(path, glyph, title: str = "") -> None:
    """Draw each node as a ring of cuboid strokes; FULL nodes as filled discs."""
    plt = _pyplot()
    from matplotlib.patches import Circle

    fig, ax = plt.subplots(figsize=(3, 3))
    for i, node in enumerate(glyph.nodes):
        cx, cy = i % 3, 2 - i // 3
        if node.full:
            ax.add_patch(Circle((cx, cy), 0.38, color="black"))
            continue
        ax.add_patch(Circle((cx, cy), 0.38, fill=False, color="0.85", linewidth=0.5))
        for bit in range(8):
            angle = np.pi / 2 - bit * np.pi / 4
            dx, dy = np.cos(angle), np.sin(angle)
            raised = node.segments >> bit & 1
            ax.plot([cx + 0.12 * dx, cx + 0.38 * dx], [cy + 0.12 * dy, cy + 0.38 * dy],
                    color="black" if raised else "0.85", linewidth=3 if raised else 1,
                    solid_capstyle="butt")
    ax.set_xlim(-0.5, 2.5)
    ax.set_ylim(-0.5, 2.5)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
