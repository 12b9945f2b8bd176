"""Heavy-tailed weights: sample an alpha-stable law, fit it back, compare with a Gaussian fit.

Run: python demos/01_stable_laws.py
"""

import numpy as np

from levymf import stable

for alpha in (1.2, 1.5, 2.0):
    truth = stable.StableParams(alpha, 0.0, 1.0, 0.0)
    x = stable.sample(truth, 50_000, seed=1)
    st = stable.fit(x)
    ga = stable.fit_gaussian(x)
    print(f"alpha={alpha}: fitted alpha {st.params.alpha:.3f}, sigma {st.params.sigma:.3f}; "
          f"KS p stable {st.ks_pvalue:.3f} vs Gaussian {ga.ks_pvalue:.2e}")

# the power-law tail: P(|X| > x) ~ 2 c_alpha x^(-alpha) / alpha
alpha = 1.5
x = np.abs(stable.sample(stable.StableParams(alpha), 200_000, seed=2))
for t in (10.0, 30.0, 100.0):
    predicted = 2 * stable.c_alpha(alpha) * t ** (-alpha) / alpha
    print(f"P(|X| > {t:>5}) empirical {np.mean(x > t):.2e}, tail law {predicted:.2e}")
