"""Layerwise Jacobian spectrum: cavity radial density against simulated eigenvalues.

Run: python demos/03_jacobian_spectrum.py
"""

import numpy as np

from levymf import spectra as sp
from levymf.plotting import spectrum_svg

from _common import path

alpha, root = 1.2, 1.5
model = sp.SpectralModel.build(alpha, root**alpha, n_mc=50_000, seed=0)
rd = sp.radial_density(model, n_radii=120)
print(f"q* = {model.qstar:.4f}, grid up to |z| = {rd.radii[-1]:.2f}, total mass {rd.total_mass:.4f}")
print(f"radius holding 99% of the eigenvalues: {sp.characteristic_radius(model):.3f}")

z = sp.jacobian_eigenvalues(alpha, root**alpha, 500, 4, seed=1, qstar=model.qstar)
edges = np.linspace(0.1, 2.0, 6)
emp, counts = sp.radial_histogram(z, edges)
theory = sp.model_bin_density(model, edges)
for lo, hi, e, t, n in zip(edges[:-1], edges[1:], emp, theory, counts):
    print(f"|z| in [{lo:.2f}, {hi:.2f}): simulated {e:.4f}  cavity {t:.4f}  ({n} eigenvalues)")
spectrum_svg(path("spectrum.svg"), z, rd.radii, rd.density)
