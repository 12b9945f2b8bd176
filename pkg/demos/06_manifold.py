"""Propagating a great circle: pairwise-distance cv across depth in three regimes.

Run: python demos/06_manifold.py
"""

from levymf import geometry as geo

print(f"chord cv of 100 equally spaced circle points: {geo.circle_chord_cv(100):.4f}")
for alpha, root, label in ((1.2, 1.5, "heavy tailed, critical"), (1.2, 0.5, "heavy tailed, ordered"),
                           (2.0, 3.0, "Gaussian, chaotic")):
    cmap = geo.cv_phase_map([alpha], [root], ensembles=5, seed=0, layers=(0, 5, 10, 20), N=300, n_points=100)
    cvs = " ".join(f"{c:.3f}" for c in cmap.cv_mean[0, 0])
    print(f"{label:>22} (alpha={alpha}, Dw^(1/alpha)={root}): cv at layers 0, 5, 10, 20 = {cvs}")
