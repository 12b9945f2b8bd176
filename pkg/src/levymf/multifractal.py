"""Eigenvector localization: inverse participation ratios and fractal dimensions.

``IPR_q(v) = sum_i |v_i|^(2q)`` scales as ``N^((1-q) D_q)``; ``D_q = 1`` for
delocalized vectors, ``0`` for localized ones, and a ``q``-dependent ``D_q``
signals multifractality.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ParameterError, ProtocolError
from .io import derive_seed
from .meanfield import fixed_point, transition_roots

MIN_SIZES = 4
MIN_R2 = 0.9


@dataclass
class DqEstimate:
    q: float
    Dq_mean: float
    Dq_std: float
    fit_r2: float
    sizes: list

    @property
    def reported(self):
        """True when the scaling fit is good enough (``fit_r2 >= 0.9``) to quote ``Dq_mean``.

        Near ``D_q = 0`` the slope itself vanishes and ``r^2`` loses meaning,
        so the estimate is always kept and this flag travels with it.
        """
        return self.fit_r2 >= MIN_R2

    def to_row(self):
        return [self.q, self.Dq_mean, self.Dq_std, self.fit_r2, self.reported]


def ipr(v, q):
    """``sum |v_i|^(2q)`` of ``v / ||v||``; columns of a 2-D array are treated as separate vectors."""
    if q <= 0:
        raise ParameterError("q must be positive")
    a = np.abs(np.asarray(v))
    norm = np.sqrt(np.sum(a * a, axis=0))
    if np.any(norm == 0):
        raise DegenerateDataError("zero vector has no participation ratio")
    p = (a / norm) ** 2
    if q == 1:
        return np.sum(p, axis=0)
    return np.sum(p**q, axis=0)


def _check_q(q):
    if q <= 0 or q == 1:
        raise ParameterError("fractal dimensions need q > 0 and q != 1")


def _check_sizes(sizes):
    sizes = sorted(set(int(n) for n in sizes))
    if len(sizes) < MIN_SIZES or sizes[-1] < 10 * sizes[0]:
        raise ProtocolError(f"need at least {MIN_SIZES} sizes spanning a decade, got {sizes}")
    return sizes


def _fit(sizes, log_iprs, q):
    """OLS of size-averaged ``log IPR`` on ``log N``; spread from per-vector dimensions at the largest size."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.array([np.mean(li) for li in log_iprs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    scale = max(float(np.max(np.abs(y))), 1.0)
    if ss_tot <= (1e-12 * scale) ** 2:
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    Dq = slope / (1.0 - q)
    local = log_iprs[-1] / ((1.0 - q) * x[-1])
    return Dq, float(np.std(local)), r2


def fractal_dimension(ensemble, q):
    """``D_q`` from ``{N: vectors}`` where each value holds unit eigenvectors as columns (N rows)."""
    _check_q(q)
    sizes = _check_sizes(ensemble.keys())
    logs = [np.log(ipr(np.asarray(ensemble[n]), q)) for n in sizes]
    Dq, spread, r2 = _fit(sizes, logs, q)
    return DqEstimate(float(q), float(Dq), spread, float(r2), sizes)


def jacobian_eigenvectors(alpha, Dw, N, seed, Db=0.0, l=1, form="WD", phi="tanh", qstar=None, annulus=None):
    """Right eigenvectors of one layerwise Jacobian at the mean-field fixed point.

    ``annulus=(r_lo, r_hi)`` keeps only eigenvectors whose eigenvalue modulus
    lies in that range.
    """
    from . import network as nw
    from .spectra import empirical_spectrum

    if qstar is None:
        qstar = fixed_point(alpha, Dw, Db, phi=phi).qstar
    L = l + 1 if form == "WD" else l
    spec = nw.NetworkSpec(alpha=alpha, Dw=Dw, Db=Db, N=N, L=L, phi=phi)
    net = nw.init(spec, derive_seed(seed, "net"))
    state = nw.forward(net, nw.stationary_input(spec, qstar, derive_seed(seed, "input")))
    sp = empirical_spectrum(net, state, l, form)
    vecs = sp.eigenvectors
    if annulus is not None:
        r = np.abs(sp.eigenvalues)
        vecs = vecs[:, (r >= annulus[0]) & (r <= annulus[1])]
    return vecs


def dq_spectrum(alpha, Dw, q_grid, sizes, realizations, seed, Db=0.0, l=1, form="WD", phi="tanh", annulus=None):
    """``D_q`` for every ``q`` in ``q_grid`` from eigenvectors pooled over realizations.

    ``realizations`` is an int or a mapping ``{N: count}``.
    """
    for q in q_grid:
        _check_q(q)
    sizes = _check_sizes(sizes)
    qstar = fixed_point(alpha, Dw, Db, phi=phi).qstar
    logs = {q: [] for q in q_grid}
    for n in sizes:
        reps = realizations[n] if isinstance(realizations, dict) else realizations
        per_q = {q: [] for q in q_grid}
        for k in range(reps):
            v = jacobian_eigenvectors(alpha, Dw, n, derive_seed(seed, "dq", n, k), Db, l, form, phi, qstar, annulus)
            for q in q_grid:
                per_q[q].append(np.log(ipr(v, q)))
        for q in q_grid:
            logs[q].append(np.concatenate(per_q[q]))
    out = []
    for q in q_grid:
        Dq, spread, r2 = _fit(sizes, logs[q], q)
        out.append(DqEstimate(float(q), float(Dq), spread, float(r2), sizes))
    return out


@dataclass
class DqGrid:
    alphas: np.ndarray
    dw_roots: np.ndarray
    q_grid: tuple
    Dq: np.ndarray  # (n_alpha, n_dw, n_q)
    spread: np.ndarray
    fit_r2: np.ndarray
    errors: dict
    transition: np.ndarray

    header = ["alpha", "dw_root", "q", "Dq_mean", "Dq_std", "fit_r2"]

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, d in enumerate(self.dw_roots):
                for k, q in enumerate(self.q_grid):
                    yield [a, d, q, self.Dq[i, j, k], self.spread[i, j, k], self.fit_r2[i, j, k]]


def _dq_cell(job):
    key, alpha, Dw, kw = job
    try:
        est = dq_spectrum(alpha, Dw, **kw)
    except (ParameterError, DegenerateDataError, ProtocolError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return key, None, f"{type(exc).__name__}: {exc}"
    return key, est, None


def dq_grid(alpha_grid, dw_grid, q_grid, sizes, realizations, seed, Db=0.0, workers=1, **kw):
    """:func:`dq_spectrum` over an ``(alpha, Dw^(1/alpha))`` grid.

    Cell ``(i, j)`` uses ``derive_seed(seed, "dq-grid", i, j)``; failed cells are NaN
    and listed in ``errors``.  ``transition`` holds the ordered-transition roots for overlays.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    roots = np.asarray(dw_grid, dtype=float)
    if alphas.size == 0 or roots.size == 0:
        raise ParameterError("grids must be nonempty")
    q_grid = tuple(float(q) for q in q_grid)
    for q in q_grid:
        _check_q(q)
    sizes = _check_sizes(sizes)
    jobs = [((i, j), a, d**a, dict(q_grid=q_grid, sizes=sizes, realizations=realizations,
                                    seed=derive_seed(seed, "dq-grid", i, j), Db=Db, **kw))
            for i, a in enumerate(alphas) for j, d in enumerate(roots)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_dq_cell, jobs, chunksize=1))
    else:
        results = [_dq_cell(j) for j in jobs]
    shape = (alphas.size, roots.size, len(q_grid))
    D, spread, r2 = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    errors = {}
    for (i, j), est, err in results:
        if err:
            errors[(i, j)] = err
            continue
        D[i, j] = [e.Dq_mean for e in est]
        spread[i, j] = [e.Dq_std for e in est]
        r2[i, j] = [e.fit_r2 for e in est]
    return DqGrid(alphas, roots, q_grid, D, spread, r2, errors, transition_roots(alphas, Db, kw.get("phi", "tanh")))
