"""Jacobian averages relative to the ordered transition: the extended critical region.

A coarse grid; the CLI command ``levymf phase-diagram`` runs the full sweep.
Run: python demos/04_phase_diagram.py
"""

import numpy as np

from levymf import phase as ph
from levymf.plotting import heatmap_svg

from _common import path

alphas = [1.2, 1.5, 2.0]
roots = np.round(np.arange(0.6, 1.61, 0.1), 2)
grid = ph.phase_diagram(alphas, roots, f2_L=(1, 11), n_mc=10_000, seed=0)
print("max L with ratio > 1 (rows alpha, columns Dw^(1/alpha)):")
print("       " + " ".join(f"{r:5.2f}" for r in roots))
for a, row in zip(alphas, grid.max_L):
    print(f"{a:5.2f}  " + " ".join(f"{int(v):5d}" for v in row))
heatmap_svg(path("phase_diagram.svg"), grid.alphas, grid.dw_roots, grid.max_L, "max L",
            grid.Dw_bar ** (1 / grid.alphas), grid.contours())
