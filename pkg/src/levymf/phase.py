"""Jacobian averages and the (alpha, Dw^(1/alpha)) phase diagram.

``J_f = int f(|z|) rho(z) d^2z`` is evaluated on the radial grid of
:func:`levymf.spectra.radial_density`, starting at ``r_min = 1e-2``.  For
``alpha < 2`` the density has unbounded support with a rapid cutoff; the grid
is extended outward until the integrand at its last point is below
``TAIL_TOLERANCE`` times the accumulated integral.  Below ``r_min`` the
average is truncated: for ``alpha < 2`` saturated units put eigenvalues
arbitrarily close to zero, and ``E|log|lambda||^L`` is not finite for
``L >= alpha``.

Ratios against the ordered transition are sign aware,
``ratio = 1 + (J - J_bar) / |J_bar|``, which equals ``J / J_bar`` whenever
``J_bar > 0`` and keeps "ratio > 1" meaning "J exceeds its transition value"
when the averages are negative.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, NumericalError, ParameterError
from .io import derive_seed
from .meanfield import ordered_transition
from .spectra import RadialDensity, SpectralModel, density, radial_density, radial_integral

F1_LMAX = 6
F2_CONTOURS = tuple(range(1, 102, 10))
TAIL_TOLERANCE = 1e-8
_MAX_EXTENSIONS = 12


@dataclass(frozen=True)
class AveragingFunction:
    """``log_power``: sgn(log r)|log r|^L; ``shifted_power``: (r - 2)^L with odd L; ``constant``: 1."""

    kind: str
    L: int = 1

    def __post_init__(self):
        if self.kind not in ("log_power", "shifted_power", "constant"):
            raise ParameterError(f"unknown averaging function {self.kind!r}")
        if self.kind != "constant" and self.L < 1:
            raise ParameterError("L must be >= 1")
        if self.kind == "shifted_power" and self.L % 2 == 0:
            raise ParameterError("shifted_power needs odd L to stay increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "log_power":
            lr = np.log(r)
            return np.sign(lr) * np.abs(lr) ** self.L
        if self.kind == "shifted_power":
            return (r - 2.0) ** self.L
        return np.ones_like(r)


def f1(L):
    return AveragingFunction("log_power", L)


def f2(L):
    return AveragingFunction("shifted_power", L)


def _tail_converged(rd, f):
    J = radial_integral(rd.radii, rd.density, f(rd.radii))
    last = abs(f(rd.radii[-1:])[0] * rd.density[-1]) * 2 * np.pi * rd.radii[-1] ** 2
    return J, last <= TAIL_TOLERANCE * abs(J)


def extend_grid(model, rd, factor=2.0, points=20):
    """``rd`` with ``points`` more radii geometrically spaced up to ``factor`` times its last radius."""
    extra = np.geomspace(rd.radii[-1], factor * rd.radii[-1], points + 1)[1:]
    rho = np.array([density(r, model) for r in extra])
    return RadialDensity(np.concatenate((rd.radii, extra)), np.concatenate((rd.density, rho)),
                         np.concatenate((rd.ystar, np.full(points, np.nan))), rd.total_mass, rd.inner_mass,
                         None if rd.clamped is None else np.concatenate((rd.clamped, np.zeros(points, bool))),
                         rd.outer_mass)


def jacobian_average(f, model, radial=None):
    """``J_f`` by radial quadrature over the density grid (see module notes on truncation)."""
    rd = radial_density(model) if radial is None else radial
    J, done = _tail_converged(rd, f)
    if math.isfinite(model.support_edge):  # hard edge: the grid already ends there
        return J
    for _ in range(_MAX_EXTENSIONS):
        if done:
            return J
        rd = extend_grid(model, rd)
        J, done = _tail_converged(rd, f)
    if not done:
        raise NumericalError(f"J_f tail did not fall below {TAIL_TOLERANCE} of the integral by |z| = {rd.radii[-1]:.3g}")
    return J


def sign_aware_ratio(J, J_bar):
    if J_bar == 0 or not math.isfinite(J_bar):
        raise DegenerateDataError(f"transition average is {J_bar}; ratio undefined")
    return 1.0 + (J - J_bar) / abs(J_bar)


def ratio_to_transition(alpha, Dw, f, Db=0.0, n_mc=100_000, seed=0):
    """Ratio of ``J_f`` at ``Dw`` to ``J_f`` at the ordered transition, each with its own ``q*``."""
    Dw_bar = ordered_transition(alpha, Db)
    ref = SpectralModel.build(alpha, Dw_bar, Db, n_mc=n_mc, seed=derive_seed(seed, "ref"))
    if Dw == Dw_bar:
        return 1.0
    model = SpectralModel.build(alpha, Dw, Db, n_mc=n_mc, seed=derive_seed(seed, "cell"))
    return sign_aware_ratio(jacobian_average(f, model), jacobian_average(f, ref))


# ---------------------------------------------------------------------------
# phase diagram


def _averages(alpha, Dw, Db, n_mc, seed, f2_L):
    """``J_f1`` for L = 1..6, ``J_f2`` for each L in ``f2_L`` and the total mass at one point."""
    model = SpectralModel.build(alpha, Dw, Db, n_mc=n_mc, seed=seed)
    rd = radial_density(model)
    j1 = [jacobian_average(f1(L), model, rd) for L in range(1, F1_LMAX + 1)]
    j2 = [jacobian_average(f2(L), model, rd) for L in f2_L]
    return np.array(j1), np.array(j2), rd.total_mass


def _cell_job(args):
    key, alpha, Dw, Db, n_mc, seed, f2_L = args
    try:
        return key, _averages(alpha, Dw, Db, n_mc, seed, f2_L), None
    except Exception as exc:  # recorded per cell, never fatal for the sweep
        return key, None, f"{type(exc).__name__}: {exc}"


@dataclass
class PhaseGrid:
    alphas: np.ndarray
    dw_roots: np.ndarray
    Dw_bar: np.ndarray
    ratio_f1: np.ndarray  # (n_alpha, n_dw, 6)
    ratio_f2: np.ndarray  # (n_alpha, n_dw, len(f2_L))
    total_mass: np.ndarray
    f2_L: tuple
    errors: dict = field(default_factory=dict)

    @property
    def max_L(self):
        """Largest L in 1..6 with f1 ratio > 1 (0 when none, -1 for failed cells)."""
        above = self.ratio_f1 > 1.0
        Ls = np.arange(1, F1_LMAX + 1)
        out = np.where(above.any(axis=2), np.max(np.where(above, Ls, 0), axis=2), 0)
        out[np.isnan(self.ratio_f1).any(axis=2)] = -1
        return out

    def contours(self):
        """Per f2 exponent, the points ``(alpha, dw_root)`` where the ratio crosses one along each row."""
        lines = {}
        for k, L in enumerate(self.f2_L):
            pts = []
            for i, a in enumerate(self.alphas):
                g = self.ratio_f2[i, :, k] - 1.0
                for j in range(len(g) - 1):
                    if np.isfinite(g[j]) and np.isfinite(g[j + 1]) and g[j] * g[j + 1] < 0:
                        t = g[j] / (g[j] - g[j + 1])
                        pts.append((float(a), float(self.dw_roots[j] + t * (self.dw_roots[j + 1] - self.dw_roots[j]))))
            lines[L] = pts
        return lines

    def rows(self):
        mL = self.max_L
        for i, a in enumerate(self.alphas):
            for j, d in enumerate(self.dw_roots):
                yield [float(a), float(d), float(self.Dw_bar[i]), *map(float, self.ratio_f1[i, j]), int(mL[i, j])]

    header = ["alpha", "dw_root", "Dw_bar"] + [f"ratio_L{L}" for L in range(1, F1_LMAX + 1)] + ["max_L"]


def phase_diagram(alpha_grid, dw_grid, Db=0.0, f2_L=F2_CONTOURS, n_mc=100_000, seed=0, workers=1):
    """Ratios of Jacobian averages over an ``(alpha, Dw^(1/alpha))`` grid.

    Cell ``(i, j)`` uses the child seed ``derive_seed(seed, "cell", i, j)`` and
    row ``i``'s transition reference uses ``derive_seed(seed, "ref", i)``, so
    the result does not depend on ``workers``.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    roots = np.asarray(dw_grid, dtype=float)
    if alphas.size == 0 or roots.size == 0:
        raise ParameterError("grids must be nonempty")
    f2_L = tuple(int(L) for L in f2_L)
    for L in f2_L:
        f2(L)
    errors = {}
    Dw_bar = np.full(alphas.size, np.nan)
    for i, a in enumerate(alphas):
        try:
            Dw_bar[i] = ordered_transition(a, Db)
        except Exception as exc:
            errors[("ref", i)] = f"{type(exc).__name__}: {exc}"

    jobs = [(("ref", i), a, Dw_bar[i], Db, n_mc, derive_seed(seed, "ref", i), f2_L)
            for i, a in enumerate(alphas) if np.isfinite(Dw_bar[i])]
    jobs += [(("cell", i, j), a, d**a, Db, n_mc, derive_seed(seed, "cell", i, j), f2_L)
             for i, a in enumerate(alphas) for j, d in enumerate(roots)]
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, val, err in pool.map(_cell_job, jobs, chunksize=1):
                results[key] = val
                if err:
                    errors[key] = err
    else:
        for job in jobs:
            key, val, err = _cell_job(job)
            results[key] = val
            if err:
                errors[key] = err

    shape = (alphas.size, roots.size)
    r1 = np.full(shape + (F1_LMAX,), np.nan)
    r2 = np.full(shape + (len(f2_L),), np.nan)
    mass = np.full(shape, np.nan)
    for i in range(alphas.size):
        ref = results.get(("ref", i))
        for j in range(roots.size):
            cell = results.get(("cell", i, j))
            if cell is None:
                continue
            mass[i, j] = cell[2]
            if ref is None:
                continue
            try:
                r1[i, j] = [sign_aware_ratio(J, Jb) for J, Jb in zip(cell[0], ref[0])]
                r2[i, j] = [sign_aware_ratio(J, Jb) for J, Jb in zip(cell[1], ref[1])]
            except DegenerateDataError as exc:
                errors[("cell", i, j)] = str(exc)
    return PhaseGrid(alphas, roots, Dw_bar, r1, r2, mass, f2_L, errors)


def default_workers(threads=None):
    return max(1, threads or os.cpu_count() or 1)
