"""Mean-field theory of deep networks with alpha-stable (heavy-tailed) weights.

Modules: ``stable`` (laws, sampling, fitting), ``network`` (random networks),
``meanfield`` (fluctuation map and ordered transition), ``spectra``
(Jacobian eigenvalue density), ``phase`` (Jacobian averages and phase
diagram), ``multifractal`` (eigenvector fractal dimensions), ``geometry``
(manifold propagation) and ``cli``.
"""

__version__ = "0.1.0"
