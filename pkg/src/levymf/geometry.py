"""Propagation of a circular input manifold through random networks.

The coefficient of variation of pairwise distances (cv) measures whether a
network contracts and expands different parts of the manifold at once; it is
low both when everything contracts (ordered phase) and when all points
decorrelate (deep chaos).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from . import network as nw
from .errors import ParameterError
from .meanfield import transition_roots
from .io import derive_seed

CIRCLE_CHORD_CV = math.sqrt(0.5 - 4.0 / math.pi**2) / (2.0 / math.pi)


def circle_chord_cv(n_points):
    """Exact chord cv for n equally spaced points on a circle.

    Tends to CIRCLE_CHORD_CV as n grows; at n = 200 it is about 0.4771.
    """
    n = int(n_points)
    if n < 3:
        raise ParameterError(f"need at least 3 points, got {n_points}")
    cot2 = 1.0 / math.tan(math.pi / (2 * n)) ** 2
    return math.sqrt(max(n * (n - 1) / (2 * cot2) - 1.0, 0.0))


@dataclass
class ManifoldCloud:
    thetas: np.ndarray
    points: list  # points[l] has shape (n_points, N); l = 0 is the input circle

    def __post_init__(self):
        if np.any(np.diff(self.thetas) <= 0):
            raise ParameterError("thetas must be strictly increasing")
        n = self.thetas.size
        if any(p.shape[0] != n for p in self.points):
            raise ParameterError("every layer must hold one image per angle")


@dataclass
class CvResult:
    cv: float
    n_pairs: int
    collapsed: bool = False


def great_circle(N, q0=1.0, n_points=200, seed=0, alpha=2.0):
    """``x(theta_k) = c (u cos theta_k + w sin theta_k)`` with a random orthonormal ``(u, w)``.

    ``c`` makes the angle-averaged ``(1/N) sum_i |x_i|^alpha`` equal ``q0``
    over the discrete point set; for ``alpha = 2`` this is ``c = sqrt(N q0)``.
    """
    if n_points < 3:
        raise ParameterError("need at least 3 points")
    if q0 < 0:
        raise ParameterError("q0 must be >= 0")
    rng = np.random.default_rng(seed)
    frame, _ = np.linalg.qr(rng.standard_normal((N, 2)))
    thetas = 2.0 * np.pi * np.arange(n_points) / n_points
    unit = np.cos(thetas)[:, None] * frame[:, 0] + np.sin(thetas)[:, None] * frame[:, 1]
    if q0 == 0:
        return ManifoldCloud(thetas, [np.zeros_like(unit)])
    m = np.mean(np.abs(unit) ** alpha)
    c = (q0 / m) ** (1.0 / alpha)
    return ManifoldCloud(thetas, [c * unit])


def propagate(net, manifold):
    """Images of the input circle at every layer (layer 0 is the input itself)."""
    x0 = manifold.points[0]
    if x0.shape[1] != net.spec.N:
        raise ParameterError(f"manifold lives in {x0.shape[1]} dimensions, network has N={net.spec.N}")
    state = nw.forward(net, x0.T)
    return ManifoldCloud(manifold.thetas, [x.T for x in state.x])


def pca(points, k=3):
    """Top-``k`` projections of the centered points and all component variances (descending)."""
    X = np.asarray(points, dtype=float)
    if X.shape[0] <= k:
        raise ParameterError("need more points than components")
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    variances = s**2 / (X.shape[0] - 1)
    proj = Xc @ vt[:k].T
    if proj.shape[1] < k:
        proj = np.hstack([proj, np.zeros((X.shape[0], k - proj.shape[1]))])
    return proj, variances


def pairwise_cv(points):
    """std / mean of all pairwise Euclidean distances; collapse gives ``cv = 0`` with the flag set."""
    X = np.asarray(points, dtype=float)
    if X.shape[0] < 3:
        raise ParameterError("need at least 3 points")
    d = pdist(X)
    mean = d.mean()
    scale = float(np.sqrt(np.mean(np.sum(X * X, axis=1))))
    if mean == 0 or mean <= 1e-14 * scale:
        return CvResult(0.0, d.size, True)
    return CvResult(float(d.std() / mean), d.size)


def layer_cvs(alpha, Dw, seed, N=500, L=20, n_points=200, q0=1.0, Db=0.0, phi="tanh"):
    """cv at layers ``0..L`` for one network and one input circle."""
    spec = nw.NetworkSpec(alpha=alpha, Dw=Dw, Db=Db, N=N, L=L, phi=phi)
    net = nw.init(spec, derive_seed(seed, "net"))
    circle = great_circle(N, q0, n_points, derive_seed(seed, "circle"), alpha)
    cloud = propagate(net, circle)
    return np.array([pairwise_cv(p).cv for p in cloud.points])


def _cell(args):
    key, alpha, Dw, seeds, kw = args
    try:
        return key, np.array([layer_cvs(alpha, Dw, s, **kw) for s in seeds]), None
    except Exception as exc:  # recorded per cell
        return key, None, f"{type(exc).__name__}: {exc}"


@dataclass
class CvMap:
    alphas: np.ndarray
    dw_roots: np.ndarray
    layers: tuple
    cv_mean: np.ndarray  # (n_alpha, n_dw, len(layers))
    cv_std: np.ndarray
    errors: dict
    transition: np.ndarray | None = None  # ordered transition as Dw_bar^(1/alpha), one per alpha

    header = ["alpha", "dw_root", "layer", "cv_mean", "cv_std"]

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, d in enumerate(self.dw_roots):
                for k, l in enumerate(self.layers):
                    yield [float(a), float(d), int(l), float(self.cv_mean[i, j, k]), float(self.cv_std[i, j, k])]


def cv_phase_map(alpha_grid, dw_grid, ensembles=100, seed=0, layers=(5, 10, 15, 20), workers=1, **kw):
    """Ensemble-mean cv over an ``(alpha, Dw^(1/alpha))`` grid at the requested layers.

    Ensemble ``e`` of cell ``(i, j)`` uses ``derive_seed(seed, "cv", i, j, e)``.
    Keyword arguments go to :func:`layer_cvs` (``N``, ``L``, ``n_points``, ``q0``, ``Db``, ``phi``).
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    roots = np.asarray(dw_grid, dtype=float)
    if alphas.size == 0 or roots.size == 0:
        raise ParameterError("grids must be nonempty")
    kw.setdefault("L", max(layers))
    if max(layers) > kw["L"]:
        raise ParameterError("requested layer deeper than the network")
    jobs = [((i, j), a, d**a, [derive_seed(seed, "cv", i, j, e) for e in range(ensembles)], kw)
            for i, a in enumerate(alphas) for j, d in enumerate(roots)]
    shape = (alphas.size, roots.size, len(layers))
    mean, std = np.full(shape, np.nan), np.full(shape, np.nan)
    errors = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs, chunksize=1))
    else:
        results = [_cell(j) for j in jobs]
    idx = list(layers)
    for (i, j), cvs, err in results:
        if err:
            errors[(i, j)] = err
            continue
        mean[i, j] = cvs[:, idx].mean(axis=0)
        std[i, j] = cvs[:, idx].std(axis=0)
    return CvMap(alphas, roots, tuple(layers), mean, std, errors, transition_roots(alphas, kw.get("Db", 0.0)))

