"""Matplotlib figure emitters for the CLI report paths.

All figures are written as SVG with deterministic settings (fixed hash
salt, no date metadata), so repeated runs produce identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "hsflow"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _disk_axes(ax):
    theta = np.linspace(0.0, 2.0 * np.pi, 512)
    ax.plot(np.cos(theta), np.sin(theta), color="0.6", lw=0.8, ls="--")
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def nested_contours(snapshots, path, title="flow domains"):
    """Nested boundary contours, one per snapshot."""
    fig, ax = plt.subplots(figsize=(5, 5))
    _disk_axes(ax)
    for snap in snapshots:
        ax.plot(snap.boundary[:, 0], snap.boundary[:, 1],
                lw=1.0, label=f"t={snap.t:g}")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(title)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def geodesic_figure(paths, path, title="geodesics"):
    """Geodesic traces inside the unit disk."""
    fig, ax = plt.subplots(figsize=(5, 5))
    _disk_axes(ax)
    for gp in paths:
        ax.plot(gp.points.real, gp.points.imag, lw=1.0)
    ax.set_title(title)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def korenblum_figure(rs, f_vals, ratios, path):
    """F(r) (log scale) and the log-ratio toward its 4/pi limit."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.semilogy(rs, f_vals, lw=1.2)
    ax1.set_xlabel("r")
    ax1.set_ylabel("F(r)")
    ax2.plot(rs, ratios, lw=1.2)
    ax2.axhline(4.0 / np.pi, color="0.5", ls="--", lw=0.8)
    ax2.set_xlabel("r")
    ax2.set_ylabel("log F(r) / log 1/(1-r)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def chart_figure(chart, path, title="exponential-map chart"):
    """Rings (images of circles) and rays (orthogonal trajectories)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    _disk_axes(ax)
    pts = chart.points
    for i in range(pts.shape[0]):
        ring = np.concatenate([pts[i], pts[i, :1]])
        ax.plot(ring.real, ring.imag, lw=1.0, color="tab:blue")
    for j in range(pts.shape[1]):
        ray = np.concatenate([[chart.z0], pts[:, j]])
        ax.plot(np.real(ray), np.imag(ray), lw=0.6, color="tab:orange")
    ax.set_title(title)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
