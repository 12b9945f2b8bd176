"""Deterministic SVG figures (fixed hash salt, no timestamp)."""

from __future__ import annotations

import io

import numpy as np

from .io import atomic_write_text


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "levymf"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path):
    plt = _plt()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_text(path, buf.getvalue())


def spectrum_svg(path, eigenvalues, radii, rho):
    plt = _plt()
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
    z = np.asarray(eigenvalues)
    a.scatter(z.real, z.imag, s=1, color="k")
    a.set_aspect("equal")
    a.set_xlabel("Re z")
    a.set_ylabel("Im z")
    b.loglog(radii, np.maximum(rho, 1e-300), color="C0", label="theory")
    if z.size:
        edges = np.geomspace(max(radii[0], 1e-3), radii[-1], 40)
        counts, _ = np.histogram(np.abs(z), edges)
        area = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
        mid = np.sqrt(edges[1:] * edges[:-1])
        keep = counts > 0
        b.loglog(mid[keep], (counts / (z.size * area))[keep], "o", ms=3, color="C1", label="empirical")
    b.set_xlabel("|z|")
    b.set_ylabel("density")
    b.legend()
    fig.tight_layout()
    _save(fig, path)


def line_svg(path, x, ys, xlabel, ylabel, labels=None, yerr=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for k, y in enumerate(ys):
        err = None if yerr is None else yerr[k]
        ax.errorbar(x, y, yerr=err, marker="o", ms=3, label=None if labels is None else labels[k])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if labels:
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def heatmap_svg(path, alphas, dw_roots, values, label, transition=None, contours=None):
    """Heatmap over ``(alpha, dw_root)`` with an optional transition line and contour points."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 5))
    v = np.asarray(values, dtype=float).T
    mesh = ax.pcolormesh(alphas, dw_roots, v, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=label)
    if transition is not None:
        ax.plot(alphas, transition, color="w", lw=2, label="ordered transition")
    for L, pts in (contours or {}).items():
        if pts:
            p = np.array(pts)
            ax.plot(p[:, 0], p[:, 1], ".", ms=4, label=f"f2 L={L}")
    ax.set_xlabel("alpha")
    ax.set_ylabel("Dw^(1/alpha)")
    fig.tight_layout()
    _save(fig, path)
