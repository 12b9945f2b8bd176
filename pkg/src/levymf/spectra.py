"""Eigenvalue density of layerwise Jacobians of heavy-tailed networks.

For ``alpha < 2`` the density at modulus ``r = |z|`` is

    rho = (y^2 - 2 r^2 y dy/d(r^2)) / pi * < chi^2 S S' / (r^2 + chi^2 y^2 S S')^2 >,
    1   = < (chi^2 S / (r^2 + y^2 chi^2 S S'))^(alpha/2) >,

with ``chi = Dw^(1/alpha) phi'(h)``, ``h`` drawn from the fixed-point
preactivation law, and ``S, S'`` independent totally skewed stable variables
of index ``alpha/2`` and scale ``(c_alpha / (4 c_(alpha/2)))^(2/alpha)``.
Averages are Monte Carlo means over one frozen sample set, so every
evaluation for a given model uses common random numbers.

The fractional moment ``<S^(alpha/2)>`` diverges, so at ``y = 0`` the
right-hand side is infinite and the support is the whole plane.  A finite
sample cannot see this: its largest ``S`` caps the average and fakes a hard
edge.  The largest ``TAIL_FRACTION`` of the ``S`` draws are therefore
replaced by their conditional expectation under the power-law tail
``P(S > x) ~ x^(-alpha/2)`` above the bulk threshold, in closed form
(hypergeometric and incomplete-beta integrals).  Each tail draw keeps its own
``chi`` and ``S'``, which are independent of ``S``.

The same formulas give the spectral mass inside radius ``r`` in closed form,

    M(r) = < r^2 / (r^2 + y^2 chi^2 S S') >,

which serves for the characteristic radius and for mass below the grid.

At ``alpha = 2`` the skewed variables are replaced by ``S = S' = 1`` (rows of a
Gaussian matrix have concentrated norms); with ``q* = 0`` this is the uniform
disk of radius ``sqrt(Dw)`` and is returned in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .errors import NumericalError, ParameterError
from .meanfield import fixed_point
from .network import activation
from .stable import c_alpha, standard_variates

R_MIN = 1e-2
N_RADII = 200
FD_STEP = 1e-3
TAIL_FRACTION = 1e-3
GRID_SPAN = 10.0  # the radial grid reaches GRID_SPAN times the 99% radius
_SERIES_T0 = 1e-5


def _tail_equation(a, T, s, Y, c1, b):
    """Conditional means of ``(c1 S / (s + Y b S))^a`` and of its ``d/d log Y`` given ``S > T``.

    ``S`` above ``T`` follows the Pareto law ``a T^a x^(-1-a)``.  With
    ``t0 = Y b T / s`` the first mean is ``a (c1 T / s)^a J(t0)``, where
    ``J(t0) = int_t0^inf dt / (t (1 + t)^a)``; the derivative is ``-a g(T)``.
    Small ``t0`` uses ``J = -log t0 - gamma - psi(a) + a t0`` with ``log t0``
    formed from logarithms, so products like ``Y b`` never underflow to zero.
    """
    c2 = Y * b
    gT = (c1 * T / (s + c2 * T)) ** a
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_t0 = (math.log(Y) if Y > 0 else -math.inf) + np.log(b) + math.log(T / s)
        t0 = np.exp(log_t0)
        big = np.maximum(t0, _SERIES_T0)
        hyp = gT * (1 + big) / big * special.hyp2f1(1.0, 1.0, a + 1.0, -1.0 / big)
        small = a * (c1 * T / s) ** a * (-log_t0 - np.euler_gamma - special.digamma(a) + a * t0)
    value = np.where(t0 >= _SERIES_T0, hyp, small)
    value = np.where(np.isfinite(log_t0), value, np.inf)
    value = np.where(c1 > 0, value, 0.0)
    return value, -a * gT


def _tail_b_average(a, T, s, Y, c1, b):
    """Conditional mean of ``b S / (s + Y b S)^2`` given ``S > T`` (incomplete beta form)."""
    w0 = s / (s + Y * b * T)
    with np.errstate(divide="ignore", over="ignore"):
        return (a * T**a * s ** (-1 - a) * b**a * Y ** (a - 1)
                * special.beta(a + 1, 1 - a) * special.betainc(a + 1, 1 - a, w0))


def _tail_mass(a, T, s, Y, b):
    """Conditional mean of ``s / (s + Y b S)`` given ``S > T``."""
    c2 = Y * b
    t0 = c2 * T / s
    return 1.0 - a * t0**a * special.beta(a, 1 - a) * special.betainc(a, 1 - a, 1.0 / (1.0 + t0))


@dataclass
class SpectralModel:
    alpha: float
    Dw: float
    qstar: float
    n_mc: int
    seed: int | None
    chi_samples: np.ndarray = field(repr=False)
    skew_samples: tuple = field(repr=False)

    def __post_init__(self):
        S, S2 = self.skew_samples
        chi2 = self.chi_samples**2
        self._half = self.alpha / 2.0
        self._n = S.size
        self.circular = self.alpha == 2.0 and bool(np.all(self.chi_samples == self.chi_samples[0]))
        bulk = np.ones(S.size, dtype=bool)
        self._T = math.inf
        if self.alpha < 2.0:
            k = max(1, int(math.ceil(TAIL_FRACTION * S.size)))
            order = np.argsort(S, kind="stable")
            bulk[order[-k:]] = False
            self._T = float(S[order[-k - 1]])
        self._A = chi2[bulk] * S[bulk]
        self._B = chi2[bulk] * S[bulk] * S2[bulk]
        self._tail_c1 = chi2[~bulk]
        self._tail_b = chi2[~bulk] * S2[~bulk]

    @classmethod
    def build(cls, alpha, Dw, Db=0.0, qstar=None, n_mc=100_000, seed=0, phi="tanh"):
        """Sample the chi and skewed-stable caches; ``qstar`` defaults to the mean-field fixed point."""
        if not (0.0 < alpha <= 2.0):
            raise ParameterError("alpha must lie in (0, 2]")
        if Dw <= 0:
            raise ParameterError("Dw must be positive")
        if qstar is None:
            qstar = fixed_point(alpha, Dw, Db, phi=phi).qstar
        rng = np.random.default_rng(seed)
        gain = Dw ** (1.0 / alpha)
        if qstar > 0:
            h = (qstar / 2.0) ** (1.0 / alpha) * standard_variates(alpha, 0.0, n_mc, rng)
            chi = gain * activation(phi)[1](h)
        else:
            chi = np.full(n_mc, gain * activation(phi)[1](0.0))
        if alpha < 2.0:
            scale = (c_alpha(alpha) / (4.0 * c_alpha(alpha / 2.0))) ** (2.0 / alpha)
            S = scale * standard_variates(alpha / 2.0, 1.0, n_mc, rng)
            S2 = scale * standard_variates(alpha / 2.0, 1.0, n_mc, rng)
        else:
            S = S2 = np.ones(n_mc)
        return cls(alpha, Dw, float(qstar), n_mc, seed, chi, (S, S2))

    # Monte Carlo averages (bulk draws plus closed-form tail draws) -----------
    def _equation(self, s, Y):
        """Right-hand side at ``(s, Y) = (|z|^2, y^2)`` and its derivative in ``log Y``."""
        d = s + Y * self._B
        p = np.divide(self._A, d, out=np.zeros_like(d), where=d > 0) ** self._half
        slope = -self._half * np.sum(p * np.divide(Y * self._B, d, out=np.zeros_like(d), where=d > 0))
        value = np.sum(p)
        if self._tail_c1.size:
            tv, ts = _tail_equation(self._half, self._T, s, Y, self._tail_c1, self._tail_b)
            value += np.sum(tv)
            slope += np.sum(ts)
        return float(value / self._n), float(slope / self._n)

    def _b_average(self, s, Y):
        """``< B / (s + Y B)^2 >`` with ``B = chi^2 S S'``."""
        d = s + Y * self._B
        total = np.sum(np.divide(self._B, d * d, out=np.zeros_like(d), where=d > 0))
        if self._tail_c1.size:
            total += np.sum(_tail_b_average(self._half, self._T, s, Y, self._tail_c1, self._tail_b))
        return float(total / self._n)

    def _mass(self, s, Y):
        """``< s / (s + Y B) >``, the spectral mass inside ``|z|^2 = s``."""
        d = s + Y * self._B
        total = np.sum(np.divide(s, d, out=np.ones_like(d), where=d > 0))
        if self._tail_c1.size:
            total += np.sum(_tail_mass(self._half, self._T, s, Y, self._tail_b))
        return float(total / self._n)

    def rhs(self, radius, y):
        """Right-hand side of the self-consistency equation at ``(|z|, y)``."""
        return self._equation(radius * radius, y * y)[0]

    @property
    def support_edge(self):
        """Outer edge of the support: infinite for ``alpha < 2``, ``sqrt(<chi^2>)`` at ``alpha = 2``."""
        if self.circular:
            return math.sqrt(self.Dw)
        if self.alpha < 2.0:
            return math.inf
        return float(np.mean(self._A)) ** 0.5


@dataclass
class RadialDensity:
    radii: np.ndarray
    density: np.ndarray
    ystar: np.ndarray
    total_mass: float
    inner_mass: float = 0.0
    clamped: np.ndarray | None = None
    outer_mass: float = 0.0

    def interpolate(self, r):
        return np.interp(r, self.radii, self.density, left=self.density[0], right=0.0)


def _solve_Y(model, s, guess=None):
    """Root ``Y = y^2`` of the self-consistency equation at ``s = |z|^2`` (bracketed Newton in log Y)."""
    if model.rhs(math.sqrt(s), 0.0) <= 1.0:
        return 0.0

    def g(t):
        val, slope = model._equation(s, math.exp(t))
        return val - 1.0, slope

    t = math.log(guess) if guess else 0.0
    lo, hi = None, None
    for _ in range(200):
        val, slope = g(t)
        if val > 0:
            lo = t
        else:
            hi = t
        if abs(val) < 1e-13:
            return math.exp(t)
        if lo is not None and hi is not None and hi - lo < 1e-14:
            return math.exp(0.5 * (lo + hi))
        step = -val / slope if slope < 0 else None
        nxt = t + step if step is not None else None
        if lo is None or hi is None:
            if nxt is None or abs(step) > 10:
                nxt = t + (10.0 if val > 0 else -10.0)
        elif nxt is None or not (min(lo, hi) < nxt < max(lo, hi)):
            nxt = 0.5 * (lo + hi)
        t = nxt
        if t < -700:
            return 0.0
    raise NumericalError(f"y* iteration did not converge at |z|^2={s}", residual=val)


def solve_ystar(radius, model):
    """``y_*`` at modulus ``radius``; zero where the sampled equation has no positive root."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if model.circular:
        return math.sqrt(max(1.0 - radius * radius / model.Dw, 0.0))
    return math.sqrt(_solve_Y(model, radius * radius))


def _density_at(model, s, Y=None):
    if Y is None:
        Y = _solve_Y(model, s)
    if Y == 0.0:
        return 0.0, 0.0
    Yp = _solve_Y(model, s * (1 + FD_STEP), Y)
    Ym = _solve_Y(model, s * (1 - FD_STEP), Y)
    dY = (Yp - Ym) / (2 * FD_STEP * s)
    return (Y - s * dY) / math.pi * model._b_average(s, Y), Y


def density(radius, model):
    """Eigenvalue density at modulus ``radius`` (negative Monte Carlo estimates clamp to 0)."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if model.circular:
        return 1.0 / (math.pi * model.Dw) if radius < math.sqrt(model.Dw) else 0.0
    return max(_density_at(model, radius * radius)[0], 0.0)


def cumulative_mass(radius, model):
    """Spectral mass inside ``|z| <= radius`` from the closed-form identity."""
    if radius <= 0:
        return 0.0
    if model.circular:
        return min(radius * radius / model.Dw, 1.0)
    s = radius * radius
    return model._mass(s, _solve_Y(model, s))


def default_radii(model, n_radii=N_RADII, r_min=R_MIN):
    """Geometric radial grid.

    For ``alpha < 2`` it spans ``[r_min, GRID_SPAN * r_99]`` with ``r_99`` the
    99% mass radius.  With a hard edge (``alpha = 2``) it ends at the edge,
    with extra points clustered just inside, where the density drops to zero
    discontinuously.
    """
    edge = model.support_edge
    if math.isinf(edge):
        top = GRID_SPAN * characteristic_radius(model, 0.99)
        return np.geomspace(min(r_min, top * 1e-3), top, n_radii)
    lo = edge * 1e-2 if edge <= r_min else r_min
    r = np.geomspace(lo, edge, n_radii)
    near = edge * (1.0 - 2.0 ** -np.arange(6.0, 30.0, 2.0))
    return np.unique(np.concatenate((r, near[near > r[-2]])))


def radial_density(model, radii=None, n_radii=N_RADII):
    """Density, ``y_*`` and total mass on a radial grid.

    ``total_mass`` is the quadrature of ``2 pi r rho`` over the grid plus the
    closed-form mass below its first radius; ``outer_mass`` is the closed-form
    mass beyond the last radius, which the quadrature leaves out.
    """
    r = default_radii(model, n_radii) if radii is None else np.asarray(radii, dtype=float)
    if model.circular:
        inside = r < math.sqrt(model.Dw) * (1 + 1e-12)
        rho = np.where(inside, 1.0 / (math.pi * model.Dw), 0.0)
        ys = np.sqrt(np.maximum(1.0 - r * r / model.Dw, 0.0))
        clamped = np.zeros(r.size, dtype=bool)
    else:
        rho = np.empty(r.size)
        ys = np.empty(r.size)
        guess = None
        for i, ri in enumerate(r):
            s = ri * ri
            Y = _solve_Y(model, s, guess)
            rho[i], _ = _density_at(model, s, Y)
            ys[i] = math.sqrt(Y)
            guess = Y if Y > 0 else None
        clamped = rho < 0
        rho = np.maximum(rho, 0.0)
    inner = cumulative_mass(r[0], model)
    mass = inner + radial_integral(r, rho)
    outer = 1.0 - cumulative_mass(r[-1], model)
    return RadialDensity(r, rho, ys, mass, inner, clamped, outer)


def radial_integral(radii, rho, weight=None):
    """``int w(r) rho(r) 2 pi r dr`` over the grid, trapezoid in ``log r``."""
    w = 1.0 if weight is None else weight
    return float(np.trapezoid(w * rho * 2 * np.pi * radii**2, np.log(radii)))


def characteristic_radius(model, mass_fraction=0.99):
    """Smallest radius holding ``mass_fraction`` of the spectral mass."""
    if not (0.0 < mass_fraction < 1.0):
        raise ParameterError("mass_fraction must lie in (0, 1)")
    if model.circular:
        return math.sqrt(mass_fraction * model.Dw)
    f = lambda r: cumulative_mass(r, model) - mass_fraction
    hi = model.support_edge
    if math.isinf(hi):
        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                raise NumericalError("spectral mass never reaches the requested fraction")
    lo = hi
    while f(lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    return optimize.brentq(f, lo, hi, xtol=1e-12 * hi, rtol=1e-10)


# ---------------------------------------------------------------------------
# empirical spectra


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def empirical_spectrum(net, state, l, form="WD", vectors=True):
    """Full eigendecomposition of a layerwise Jacobian (right eigenvectors as columns).

    Derivatives are floored at ``eps * max(phi')`` before diagonalizing.  That
    perturbs the matrix by less than the eigensolver's own backward error, but
    stops the solver's diagonal balancing from blowing up rounding noise in
    columns of saturated units (``phi'`` down to 1e-190 for heavy-tailed
    inputs), which otherwise returns spurious one-site eigenvectors.
    """
    from .network import derivative_diagonal, layer_jacobian

    layer_jacobian(net, state, l, form)  # validates l and form
    d = derivative_diagonal(net, state, l)
    d = np.maximum(d, np.finfo(float).eps * d.max())
    J = d[:, None] * net.weights[l - 1] if form == "DW" else net.weights[l] * d[None, :]
    try:
        if vectors:
            w, v = np.linalg.eig(J)
            return Spectrum(w, v)
        return Spectrum(np.linalg.eigvals(J))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def radial_histogram(eigenvalues, edges):
    """Eigenvalue density per annulus: counts / (n pi (r2^2 - r1^2))."""
    r = np.abs(np.asarray(eigenvalues))
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(r, edges)
    area = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    return counts / (r.size * area), counts


def model_bin_density(model, edges, rho=None):
    """Average theoretical density over each annulus, from the cumulative-mass identity."""
    edges = np.asarray(edges, dtype=float)
    M = np.array([cumulative_mass(e, model) for e in edges])
    return np.diff(M) / (np.pi * (edges[1:] ** 2 - edges[:-1] ** 2))


def angular_uniformity(eigenvalues, bins=16):
    """Chi-squared p-value for uniform phases of the upper-half-plane eigenvalues.

    Real eigenvalues (an O(sqrt N) atom of real matrices) and conjugate
    duplicates are excluded.
    """
    z = np.asarray(eigenvalues)
    z = z[z.imag > 1e-10 * np.maximum(np.abs(z), 1e-300)]
    counts, _ = np.histogram(np.angle(z), bins=bins, range=(0.0, np.pi))
    return float(stats.chisquare(counts).pvalue)


def spectral_radius(eigenvalues):
    return float(np.max(np.abs(eigenvalues)))


def jacobian_eigenvalues(alpha, Dw, N, realizations, seed, Db=0.0, qstar=None, form="WD", l=1, phi="tanh"):
    """Pooled eigenvalues of layerwise Jacobians of random networks at the mean-field fixed point."""
    from . import network as nw
    from .io import derive_seed

    if qstar is None:
        qstar = fixed_point(alpha, Dw, Db, phi=phi).qstar
    L = l + 1 if form == "WD" else l
    spec = nw.NetworkSpec(alpha=alpha, Dw=Dw, Db=Db, N=N, L=L, phi=phi)
    out = []
    for k in range(realizations):
        net = nw.init(spec, derive_seed(seed, "net", k))
        x0 = nw.stationary_input(spec, qstar, derive_seed(seed, "input", k))
        state = nw.forward(net, x0)
        out.append(empirical_spectrum(net, state, l, form, vectors=False).eigenvalues)
    return np.concatenate(out)
