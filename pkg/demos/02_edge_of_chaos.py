"""Mean-field signal propagation: the fluctuation parameter q and the ordered transition.

Run: python demos/02_edge_of_chaos.py
"""

import numpy as np

from levymf import meanfield as mf
from levymf import network as nw
from levymf.plotting import line_svg

from _common import path

alphas = np.round(np.arange(1.0, 2.01, 0.1), 2)
line = mf.transition_line(alphas)
for a, Dw_bar, qstar, _ in line:
    print(f"alpha={a:.1f}: ordered transition Dw_bar = {Dw_bar:.4f}  (Dw_bar^(1/alpha) = {Dw_bar ** (1 / a):.4f})")
line_svg(path("transition_line.svg"), alphas, [[r[1] ** (1 / r[0]) for r in line]], "alpha", "Dw_bar^(1/alpha)")

# a simulated network tracks the mean-field map layer by layer
alpha, N, L = 1.5, 3000, 8
spec = nw.NetworkSpec.from_root(alpha, 1.5, N=N, L=L)
q = mf.trajectory(alpha, spec.Dw, 0.0, 1.0, L)
x0 = np.random.default_rng(0).choice([-1.0, 1.0], N)
state = nw.forward(nw.init(spec, 0), x0)
for l in range(1, L + 1):
    print(f"layer {l}: mean field q = {q[l]:.4f}, simulated (median estimator) {mf.empirical_q(state.h[l - 1], alpha):.4f}")
