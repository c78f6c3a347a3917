"""Static SVG figures for sweep output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "zetaspec"
plt.rcParams["svg.fonttype"] = "none"
_SVG_META = {"Date": None, "Creator": "zetaspec"}


def fit_inverse_log(kappas, values) -> float:
    """Least-squares ``c`` in ``E ~ c / ln kappa``."""
    x = 1.0 / np.log(np.asarray(kappas, dtype=float))
    y = np.asarray(values, dtype=float)
    return float(np.dot(x, y) / np.dot(x, x))


def plot_error_envelope(kappas, e_min, e_max, path, title: str | None = None) -> float:
    """Local minima and maxima of the uniform error against ``kappa``, with a ``c/ln kappa`` fit.

    Returns the fitted constant.
    """
    kappas = np.asarray(kappas, dtype=float)
    c = fit_inverse_log(np.concatenate([kappas, kappas]), np.concatenate([e_min, e_max]))
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(kappas, e_max, "o", ms=3, color="tab:red", label="local max", gid="e-max")
    ax.plot(kappas, e_min, "o", ms=3, color="tab:blue", label="local min", gid="e-min")
    grid = np.linspace(kappas.min(), kappas.max(), 400)
    ax.plot(grid, c / np.log(grid), "-", color="0.3", lw=1, label=f"fit: {c:.4g} / ln κ", gid="fit")
    ax.set_xlabel("κ")
    ax.set_ylabel("uniform error")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return c


def plot_rug(zeros, eigenvalues, interval, path, title: str | None = None) -> tuple[int, int]:
    """Zero ordinates (upper row, solid red) against eigenvalues (lower row, dotted blue).

    Returns the number of zero and eigenvalue ticks drawn.
    """
    lo, hi = interval
    z = np.asarray(zeros, dtype=float)
    z = z[(z >= lo) & (z <= hi)]
    v = np.asarray(eigenvalues, dtype=float)
    v = v[(v >= lo) & (v <= hi)]
    fig, ax = plt.subplots(figsize=(9, 2.4))
    ax.vlines(z, 0.55, 1.0, colors="red", linewidth=1.0, gid="zero-ticks")
    ax.vlines(v, 0.0, 0.45, colors="blue", linestyles="dotted", linewidth=1.0, gid="eigen-ticks")
    ax.set_xlim(lo, hi)
    ax.set_ylim(-0.05, 1.05)
    ax.set_yticks([0.225, 0.775])
    ax.set_yticklabels(["eigenvalues", "zeros"])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return len(z), len(v)


def count_svg_ticks(path, gid: str) -> int:
    """Number of line segments inside the SVG group with id ``gid``."""
    import xml.etree.ElementTree as ET

    ns = "{http://www.w3.org/2000/svg}"
    root = ET.parse(Path(path)).getroot()
    for g in root.iter(f"{ns}g"):
        if g.get("id") == gid:
            return sum(1 for _ in g.iter(f"{ns}path"))
    return 0
