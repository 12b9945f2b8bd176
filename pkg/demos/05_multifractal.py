"""Eigenvector localization: fractal dimensions D_q of layerwise-Jacobian eigenvectors.

Run: python demos/05_multifractal.py
"""

from levymf import multifractal as mfr

sizes = [32, 64, 128, 256, 512]
reps = {n: 8 * 512 // n for n in sizes}
for alpha in (2.0, 1.2):
    est = mfr.dq_spectrum(alpha, 1.5**alpha, [0.5, 2, 4], sizes, reps, seed=0)
    text = ", ".join(f"D_{e.q:g} = {e.Dq_mean:.3f} (r2 {e.fit_r2:.2f})" for e in est)
    print(f"alpha={alpha}: {text}")
