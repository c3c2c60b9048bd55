"""Matplotlib rendering of training curves to image files.

Figures are written next to their CSV counterparts; the Agg backend keeps
this usable on headless machines.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .reporting import moving_average  # noqa: E402

FIG_SIZE = (6.4, 4.0)
MEDIAN_COLOR = "#1f77b4"
BAND_COLOR = "#1f77b4"


def plot_median_curve(curve: dict, out_path, title: str | None = None,
                      smooth: int = 0) -> Path:
    """Median episode-return curve with an interquartile band."""
    episodes = curve["episodes"]
    med, q1, q3 = curve["median"], curve["q1"], curve["q3"]
    if smooth:
        med = moving_average(med, smooth)
        q1 = moving_average(q1, smooth)
        q3 = moving_average(q3, smooth)

    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.fill_between(episodes, q1, q3, color=BAND_COLOR, alpha=0.2,
                    linewidth=0, label="interquartile range")
    ax.plot(episodes, med, color=MEDIAN_COLOR, linewidth=1.5, label="median")
    ax.set_xlabel("episode")
    ax.set_ylabel("return per episode")
    if title:
        ax.set_title(title)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.legend(frameon=False, loc="lower right")
    ax.margins(x=0)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path
