"""PNG renderings of emitted tables (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_table(path: Path, header: list[str], rows: list[list], x: int = 0,
               ys: list[int] | None = None, title: str = "") -> Path:
    """Line plot of the columns ``ys`` against column ``x``; returns the PNG path."""
    ys = [i for i in range(len(header)) if i != x] if ys is None else ys
    cols = list(zip(*rows)) if rows else [[] for _ in header]
    fig, ax = plt.subplots(figsize=(7, 4), dpi=110)
    for i in ys:
        ax.plot(cols[x], cols[i], lw=1.2, label=header[i])
    ax.set_xlabel(header[x])
    ax.set_title(title)
    ax.grid(alpha=0.3)
    if len(ys) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(path).with_suffix(".png")
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)
    return out
