"""Layerwise fluctuation map of stable preactivations and its fixed point.

The preactivation law at layer ``l`` is ``S_alpha((q^l / 2)^(1/alpha))`` and

    q^l = Dw * E|phi(h)|^alpha + Db,   h ~ S_alpha((q^(l-1) / 2)^(1/alpha)),

with ``q^1 = Dw q^0 + Db``.  ``ordered_transition`` finds the weight scale at
which the fixed point ``q*`` first reaches a small threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketError, DivergenceError, ParameterError
from .network import activation
from .stable import StableParams, _panel_rule, _standard_law, ppf

TRANSITION_THRESHOLD = 0.01
OVERFLOW_GUARD = 1e12
DW_BRACKET = (1e-3, 1e3)


@dataclass
class MeanFieldTrajectory:
    q: np.ndarray
    converged: bool
    qstar: float

    @property
    def iterations(self):
        return len(self.q) - 1


@lru_cache(maxsize=64)
def _nodes(alpha):
    """Quadrature nodes on [0, inf) with the standard symmetric density folded in."""
    law = _standard_law(alpha, 0.0)
    half = law.half
    first = 0.1
    graded = np.concatenate(([0.0], first * 2.0 ** -np.arange(30, 0, -1)))
    edges = np.concatenate((graded, np.arange(first, half + 1e-12, 0.1)))
    edges[-1] = half
    u, w = _panel_rule(edges)
    nodes, weights = [u], [w * law.density(u)]
    if alpha < 2.0:
        t = np.linspace(math.log(half), math.log(1e30), 270)
        tu, tw = _panel_rule(t)
        uu = np.exp(tu)
        nodes.append(uu)
        weights.append(tw * uu * law._tail_right(uu))
        remainder = law._series_mass(law.right_coef, 1e30)
    else:
        remainder = 0.0
    return np.concatenate(nodes), np.concatenate(weights), remainder


def _check(alpha, Dw=1.0, Db=0.0):
    if not (0.0 < alpha <= 2.0) or not math.isfinite(alpha):
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    if not Dw > 0 or not math.isfinite(Dw):
        raise ParameterError(f"Dw must be positive and finite, got {Dw}")
    if not Db >= 0 or not math.isfinite(Db):
        raise ParameterError(f"Db must be >= 0, got {Db}")


def activation_moment(q, alpha, phi="tanh"):
    """``E|phi(h)|^alpha`` for ``h ~ S_alpha((q/2)^(1/alpha))``."""
    _check(alpha)
    if q < 0:
        raise ParameterError("fluctuation parameter must be >= 0")
    f, _, bound = activation(phi)
    if q == 0:
        return float(abs(f(0.0)) ** alpha)
    s = (q / 2.0) ** (1.0 / alpha)
    u, w, remainder = _nodes(float(alpha))
    su = s * u
    g = np.abs(f(su)) ** alpha + np.abs(f(-su)) ** alpha
    return float(np.dot(w, g) + 2.0 * bound**alpha * remainder)


def q_map(q_prev, alpha, Dw, Db=0.0, phi="tanh"):
    """One step of the fluctuation map."""
    return Dw * activation_moment(q_prev, alpha, phi) + Db


def fixed_point(alpha, Dw, Db=0.0, q0=1.0, tol=1e-10, max_iter=10_000, phi="tanh"):
    """Iterate the map from ``q^1 = Dw q0 + Db`` until successive values agree.

    Stops once ``|q^l - q^(l-1)| < tol * max(q^l, 1)``; switches to half-damped
    updates if the increments start alternating in sign.
    """
    _check(alpha, Dw, Db)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if q0 < 0:
        raise ParameterError("q0 must be >= 0")
    qs = [float(q0), Dw * q0 + Db]
    damped = False
    converged = False
    for _ in range(max_iter):
        prev = qs[-1]
        new = q_map(prev, alpha, Dw, Db, phi)
        if damped:
            new = 0.5 * prev + 0.5 * new
        if not math.isfinite(new) or new > OVERFLOW_GUARD:
            raise DivergenceError(f"fluctuation parameter diverged at layer {len(qs)}", residual=new)
        qs.append(new)
        if abs(new - prev) < tol * max(new, 1.0):
            converged = True
            break
        if not damped and len(qs) > 3 and (qs[-1] - qs[-2]) * (qs[-2] - qs[-3]) < 0:
            damped = True
    q = np.array(qs)
    return MeanFieldTrajectory(q=q, converged=converged, qstar=float(q[-1]))


def trajectory(alpha, Dw, Db=0.0, q0=1.0, L=10, phi="tanh"):
    """``q^0, ..., q^L`` for a depth-``L`` network."""
    _check(alpha, Dw, Db)
    if L < 1:
        raise ParameterError("L must be >= 1")
    qs = [float(q0), Dw * q0 + Db]
    for _ in range(L - 1):
        qs.append(q_map(qs[-1], alpha, Dw, Db, phi))
    return np.array(qs[: L + 1])


def _reaches(alpha, Dw, Db, q0, threshold, phi, tol=1e-10, max_iter=100_000):
    # monotone map => monotone iterates, so the verdict is final once the
    # sequence crosses the threshold in its direction of travel
    prev = Dw * q0 + Db
    for _ in range(max_iter):
        new = q_map(prev, alpha, Dw, Db, phi)
        if new >= prev and new >= threshold:
            return True
        if new <= prev and new < threshold:
            return False
        if abs(new - prev) < tol * max(new, 1.0):
            return new >= threshold
        prev = new
    return prev >= threshold


def ordered_transition(alpha, Db=0.0, threshold=TRANSITION_THRESHOLD, q0=1.0, phi="tanh", rtol=1e-7):
    """Smallest ``Dw`` whose fixed point satisfies ``q* >= threshold`` (bisection in log Dw)."""
    _check(alpha, 1.0, Db)
    if threshold <= 0:
        raise ParameterError("threshold must be positive")
    lo, hi = DW_BRACKET
    if _reaches(alpha, lo, Db, q0, threshold, phi):
        raise BracketError(f"q* already exceeds {threshold} at Dw={lo}")
    if not _reaches(alpha, hi, Db, q0, threshold, phi):
        raise BracketError(f"q* stays below {threshold} up to Dw={hi}")
    llo, lhi = math.log(lo), math.log(hi)
    while lhi - llo > rtol:
        mid = 0.5 * (llo + lhi)
        if _reaches(alpha, math.exp(mid), Db, q0, threshold, phi):
            lhi = mid
        else:
            llo = mid
    return math.exp(lhi)


def transition_line(alphas, Db=0.0, threshold=TRANSITION_THRESHOLD, q0=1.0, phi="tanh"):
    """Rows ``(alpha, Dw_bar, qstar, iterations)`` along the ordered transition."""
    rows = []
    for a in alphas:
        dw = ordered_transition(a, Db, threshold, q0, phi)
        traj = fixed_point(a, dw, Db, q0, phi=phi)
        rows.append((float(a), dw, traj.qstar, traj.iterations))
    return rows


# ---------------------------------------------------------------------------
# empirical estimators for simulated networks


@lru_cache(maxsize=64)
def _abs_median(alpha):
    return float(ppf(0.75, StableParams(float(alpha))))


def empirical_q(h, alpha):
    """Fluctuation parameter of a preactivation sample from its median absolute value.

    For ``h ~ S_alpha((q/2)^(1/alpha))``, ``median|h| = (q/2)^(1/alpha) m_alpha``
    where ``m_alpha`` is the median of ``|S_alpha(1)|``.  Unlike the sample
    ``alpha``-th moment, this stays finite for ``alpha < 2``.
    """
    h = np.asarray(h, dtype=float)
    scale = np.median(np.abs(h), axis=0) / _abs_median(alpha)
    return 2.0 * scale**alpha


def activation_q(x_prev, alpha, Dw, Db=0.0):
    """Conditional fluctuation parameter ``Dw mean|x^(l-1)|^alpha + Db`` of the next layer."""
    return Dw * np.mean(np.abs(np.asarray(x_prev)) ** alpha, axis=0) + Db


def alpha_moment(v, alpha):
    """Sample ``(1/N) sum |v_i|^alpha``; consistent for ``q`` only when ``alpha = 2``."""
    return np.mean(np.abs(np.asarray(v)) ** alpha, axis=0)


def transition_roots(alphas, Db=0.0, phi="tanh"):
    """``Dw_bar(alpha)^(1/alpha)`` for overlays; NaN where no transition is bracketed."""
    out = []
    for a in alphas:
        try:
            out.append(ordered_transition(float(a), Db, phi=phi) ** (1.0 / a))
        except (BracketError, ParameterError):
            out.append(math.nan)
    return np.array(out)
