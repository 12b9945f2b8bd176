"""Alpha-stable laws: sampling, density, CDF, maximum-likelihood fitting, KS tests.

Parameterization is ``S_alpha(beta, sigma, mu)`` with characteristic function

    exp(-|sigma u|^alpha (1 - i beta sgn(u) Phi(u; alpha)) + i u mu),
    Phi = tan(pi alpha / 2) for alpha != 1, -(2/pi) log|u| for alpha = 1.

With this convention ``S_2(sigma)`` is a Gaussian of variance ``2 sigma^2`` and
``S_1(sigma)`` is a Cauchy law of scale ``sigma``.

Densities come from a cached table per ``(alpha, beta)``: the characteristic
function is inverted by Gauss-Legendre panels on a graded mesh, interpolated
with a cubic spline, and replaced beyond a crossover point by the
large-``|x|`` series whose leading term is ``c_alpha |x|^(-1-alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special, stats
from scipy.interpolate import CubicSpline

from .errors import DegenerateDataError, NumericalError, ParameterError

__all__ = [
    "StableParams",
    "FitResult",
    "c_alpha",
    "sample",
    "pdf",
    "logpdf",
    "cdf",
    "ppf",
    "tail_density",
    "fit",
    "fit_gaussian",
    "ks_test",
    "normalized_scale",
    "ensemble_sigma",
]

ALPHA_FLOOR = 0.5


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        a, b, s, m = self.alpha, self.beta, self.sigma, self.mu
        if not (0.0 < a <= 2.0) or not math.isfinite(a):
            raise ParameterError(f"alpha must lie in (0, 2], got {a}")
        if not (-1.0 <= b <= 1.0):
            raise ParameterError(f"beta must lie in [-1, 1], got {b}")
        if not (s > 0.0) or not math.isfinite(s):
            raise ParameterError(f"sigma must be positive and finite, got {s}")
        if not math.isfinite(m):
            raise ParameterError(f"mu must be finite, got {m}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FitResult:
    params: StableParams
    log_likelihood: float
    n: int
    ks_stat: float
    ks_pvalue: float

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "log_likelihood": self.log_likelihood,
            "n": self.n,
            "ks_stat": self.ks_stat,
            "ks_pvalue": self.ks_pvalue,
        }


def c_alpha(alpha):
    """Tail constant ``Gamma(1 + alpha) sin(pi alpha / 2) / pi``."""
    if alpha == 2:
        return 0.0
    return special.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0) / math.pi


def normalized_scale(sigma, alpha, Nw, Nh):
    """``D_w = 2 sqrt(Nw Nh) sigma^alpha`` for an ``Nw x Nh`` weight matrix."""
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if Nw < 1 or Nh < 1:
        raise ParameterError("matrix dimensions must be >= 1")
    return 2.0 * math.sqrt(Nw * Nh) * sigma**alpha


def ensemble_sigma(D, alpha, N=1):
    """Scale ``(D / 2N)^(1/alpha)`` of the ensemble law ``S_alpha((D/2N)^(1/alpha))``."""
    if D < 0:
        raise ParameterError("scale parameter must be >= 0")
    return (D / (2.0 * N)) ** (1.0 / alpha)


def tail_density(x, alpha, Dw, N):
    """Asymptotic weight density ``c_alpha Dw |x|^(-1-alpha) / (2N)``."""
    if not (0.0 < alpha < 2.0):
        raise ParameterError("tail density needs 0 < alpha < 2 (no power tail at alpha = 2)")
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ParameterError("tail density is undefined at x = 0")
    out = c_alpha(alpha) * Dw * np.abs(x) ** (-1.0 - alpha) / (2.0 * N)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# sampling


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def standard_variates(alpha, beta, size, rng):
    """Chambers-Mallows-Stuck draws from ``S_alpha(beta, 1, 0)``."""
    V = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    W = rng.standard_exponential(size=size)
    if alpha == 1.0:
        half_pi = math.pi / 2
        bv = half_pi + beta * V
        return (2 / math.pi) * (bv * np.tan(V) - beta * np.log(half_pi * W * np.cos(V) / bv))
    if alpha == 2.0:
        return 2.0 * np.sqrt(W) * np.sin(V)
    zeta = beta * math.tan(math.pi * alpha / 2)
    B = math.atan(zeta) / alpha
    S = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    aVB = alpha * (V + B)
    return (
        S
        * np.sin(aVB)
        / np.cos(V) ** (1.0 / alpha)
        * (np.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha)
    )


def sample(params, n, seed=None):
    """Draw ``n`` i.i.d. variates from ``params``; identical seeds give identical arrays."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = _as_rng(seed)
    x = standard_variates(params.alpha, params.beta, int(n), rng)
    a, b, s, m = params.alpha, params.beta, params.sigma, params.mu
    if a == 1.0:
        return s * x + (2 / math.pi) * b * s * math.log(s) + m
    return s * x + m


def sample_scaled(alpha, scale, size, rng):
    """Symmetric ``S_alpha(scale)`` draws of arbitrary shape; zero scale gives exact zeros."""
    if scale == 0:
        return np.zeros(size)
    return scale * standard_variates(alpha, 0.0, size, rng)


# ---------------------------------------------------------------------------
# density tables

_GL16 = np.polynomial.legendre.leggauss(16)
_GRID_STEP = 0.025
_BASE_HALF_WIDTH = 10.0
_MAX_HALF_WIDTH = 80.0
_CHUNK = 4_000_000


def _panel_rule(edges):
    x, w = _GL16
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


class _StandardLaw:
    """Density and CDF of ``S_alpha(beta, 1, 0)``.

    The core table lives in the shifted coordinate ``x0 = x1 - beta tan(pi alpha/2)``
    (continuous in alpha, mode near zero); tails use the series in ``x1``.
    """

    def __init__(self, alpha, beta):
        self.alpha = alpha
        self.beta = 0.0 if alpha == 2.0 else beta
        a, b = alpha, self.beta
        if a == 1.0 or b == 0.0:
            self.phi_tan = 0.0
        else:
            self.phi_tan = math.tan(math.pi * a / 2)
        self.shift = b * self.phi_tan
        self.A = math.hypot(1.0, self.shift)
        spread = max(1.0, self.A ** (1.0 / a))
        half = min(_BASE_HALF_WIDTH * spread + abs(self.shift), _MAX_HALF_WIDTH)
        if a < 0.9:
            half = min(half, 8.0 * spread)
        self._right_coef = self._series_coefficients(+1)
        self._left_coef = self._series_coefficients(-1)
        while True:
            self._build_core(half)
            if self._crossover_ok() or half >= _MAX_HALF_WIDTH:
                break
            half = min(2.0 * half, _MAX_HALF_WIDTH)
        self._finalize_cdf()

    # tail series -----------------------------------------------------------
    def _series_coefficients(self, side):
        a = self.alpha
        if a == 2.0:
            return np.zeros(0)
        b = side * self.beta
        if a == 1.0 and b != 0.0:
            return np.array([(1.0 + b) / math.pi])
        theta = math.atan(b * self.phi_tan) if b != 0.0 else 0.0
        k = np.arange(1, 41)
        logmag = k * math.log(self.A) + special.gammaln(k * a + 1) - special.gammaln(k + 1)
        sign = np.where(k % 2 == 1, 1.0, -1.0)
        return sign * np.exp(logmag) * np.sin(k * (math.pi * a / 2 + theta)) / math.pi

    def _truncate_series(self, coef, x_edge):
        if coef.size <= 1 or x_edge <= 0:
            return coef
        k = np.arange(1, coef.size + 1)
        # optimal truncation of an asymptotic series: stop at the smallest term
        env = special.gammaln(k * self.alpha + 1) - special.gammaln(k + 1)
        env = env + k * math.log(self.A) - (k * self.alpha + 1) * math.log(x_edge)
        stop = int(np.argmin(env)) + 1
        return coef[:stop]

    def _series(self, coef, x):
        # x > 0, distance along the tail in S1 coordinates
        if coef.size == 0:
            return np.zeros_like(x)
        k = np.arange(1, coef.size + 1)
        return np.sum(coef[None, :] * x[:, None] ** (-(k[None, :] * self.alpha) - 1.0), axis=1)

    def _series_mass(self, coef, x):
        if coef.size == 0:
            return 0.0
        k = np.arange(1, coef.size + 1)
        return float(np.sum(coef * x ** (-k * self.alpha) / (k * self.alpha)))

    # core quadrature -------------------------------------------------------
    def _phase(self, u):
        a, b = self.alpha, self.beta
        if b == 0.0:
            return np.zeros_like(u)
        if a == 1.0:
            return -(2 / math.pi) * b * u * np.log(u)
        return self.shift * (u**a - u)

    def _core_density(self, x):
        a = self.alpha
        U = 40.0 ** (1.0 / a)
        u1 = min(1.0, U / 4)
        graded = np.concatenate(([0.0], u1 * 2.0 ** -np.arange(24, -1, -1)))
        if self.beta == 0.0:
            omega = np.max(np.abs(x))
        elif a == 1.0:
            omega = np.max(np.abs(x)) + (2 / math.pi) * abs(self.beta) * (abs(math.log(U)) + 1)
        else:
            slope = a * max(u1 ** (a - 1), U ** (a - 1)) + 1.0
            omega = np.max(np.abs(x)) + abs(self.shift) * slope
        width = min(0.5, 2 * math.pi / max(omega, 1e-12))
        n_uniform = max(1, int(math.ceil((U - u1) / width)))
        edges = np.concatenate((graded, np.linspace(u1, U, n_uniform + 1)[1:]))
        u, w = _panel_rule(edges)
        weight = w * np.exp(-(u**a))
        phase = self._phase(u)
        out = np.empty_like(x)
        step = max(1, _CHUNK // u.size)
        for i in range(0, x.size, step):
            xs = x[i : i + step]
            out[i : i + step] = np.cos(np.outer(xs, u) - phase) @ weight
        return out / math.pi

    def _build_core(self, half):
        n = int(round(2 * half / _GRID_STEP)) + 1
        self.half = half
        self.grid = np.linspace(-half, half, n)
        self.values = self._core_density(self.grid)
        self.spline = CubicSpline(self.grid, self.values)
        self.right_coef = self._truncate_series(self._right_coef, half + self.shift)
        self.left_coef = self._truncate_series(self._left_coef, half - self.shift)

    def _crossover_ok(self):
        if self.alpha == 2.0:
            return True
        ok = True
        for edge_val, tail in (
            (self.values[-1], self._tail_right(np.array([self.half]))[0]),
            (self.values[0], self._tail_left(np.array([-self.half]))[0]),
        ):
            if abs(tail - edge_val) > 0.01 * abs(edge_val) + 1e-9:
                ok = False
        return ok

    def _tail_right(self, x0):
        x1 = x0 + self.shift
        return self._series(self.right_coef, x1)

    def _tail_left(self, x0):
        x1 = -(x0 + self.shift)
        return self._series(self.left_coef, x1)

    def _finalize_cdf(self):
        self.left_mass = self._series_mass(self.left_coef, self.half - self.shift)
        self.right_mass = self._series_mass(self.right_coef, self.half + self.shift)
        self.cum = self.spline.antiderivative()
        core = float(self.cum(self.half) - self.cum(-self.half))
        total = self.left_mass + core + self.right_mass
        self.total_mass = total
        if abs(total - 1.0) > 1e-3:
            raise NumericalError(
                f"stable density table for alpha={self.alpha}, beta={self.beta} is not normalized",
                residual=total - 1.0,
            )

    # public evaluation -----------------------------------------------------
    def density(self, x0):
        x0 = np.asarray(x0, dtype=float)
        out = np.empty_like(x0)
        inside = np.abs(x0) <= self.half
        out[inside] = self.spline(x0[inside])
        right = x0 > self.half
        left = x0 < -self.half
        if right.any():
            out[right] = self._tail_right(x0[right])
        if left.any():
            out[left] = self._tail_left(x0[left])
        return np.maximum(out, 0.0)

    def distribution(self, x0):
        x0 = np.asarray(x0, dtype=float)
        out = np.empty_like(x0)
        inside = np.abs(x0) <= self.half
        out[inside] = self.left_mass + (self.cum(x0[inside]) - self.cum(-self.half))
        right = x0 > self.half
        left = x0 < -self.half
        if right.any():
            out[right] = 1.0 - np.array(
                [self._series_mass(self.right_coef, v + self.shift) for v in x0[right]]
            )
        if left.any():
            out[left] = np.array(
                [self._series_mass(self.left_coef, -(v + self.shift)) for v in x0[left]]
            )
        return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=128)
def _standard_law(alpha, beta):
    return _StandardLaw(float(alpha), float(beta))


def _standardize(x, params):
    a, b, s, m = params.alpha, params.beta, params.sigma, params.mu
    x = np.asarray(x, dtype=float)
    if a == 1.0:
        x1 = (x - m - (2 / math.pi) * b * s * math.log(s)) / s
    else:
        x1 = (x - m) / s
    law = _standard_law(a, 0.0 if a == 2.0 else b)
    return law, x1 - law.shift


def pdf(x, params):
    """Density of ``S_alpha(beta, sigma, mu)`` at ``x``."""
    law, x0 = _standardize(x, params)
    out = law.density(np.atleast_1d(x0)) / params.sigma
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def logpdf(x, params):
    return np.log(np.maximum(pdf(x, params), 1e-300))


def cdf(x, params):
    law, x0 = _standardize(x, params)
    out = law.distribution(np.atleast_1d(x0))
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def ppf(p, params):
    """Quantile function by bracketed inversion of :func:`cdf`."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p <= 0) | (p >= 1)):
        raise ParameterError("probabilities must lie in (0, 1)")
    law = _standard_law(params.alpha, 0.0 if params.alpha == 2.0 else params.beta)
    grid_cdf = law.left_mass + law.cum(law.grid) - law.cum(-law.half)
    out = np.empty_like(p)
    for i, pi in enumerate(p):
        guess = float(np.interp(pi, grid_cdf, law.grid))
        lo, hi = guess - 1.0, guess + 1.0
        while law.distribution(np.array([lo]))[0] > pi:
            lo -= 2 * (hi - lo)
        while law.distribution(np.array([hi]))[0] < pi:
            hi += 2 * (hi - lo)
        out[i] = optimize.brentq(
            lambda v: law.distribution(np.array([v]))[0] - pi, lo, hi, xtol=1e-12
        )
    x1 = out + law.shift
    a, b, s, m = params.alpha, params.beta, params.sigma, params.mu
    if a == 1.0:
        y = s * x1 + (2 / math.pi) * b * s * math.log(s) + m
    else:
        y = s * x1 + m
    return y if y.size > 1 else float(y[0])


# ---------------------------------------------------------------------------
# fitting

_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@lru_cache(maxsize=1)
def _alpha_lookup():
    """Tabulate the quantile-spread ratio (x95 - x05) / (x75 - x25) against alpha."""
    alphas = np.round(np.concatenate((np.arange(0.5, 1.0, 0.1), np.arange(1.0, 2.0001, 0.05))), 10)
    nu = []
    for a in alphas:
        q = ppf(np.array([0.05, 0.25, 0.75, 0.95]), StableParams(float(a)))
        nu.append((q[3] - q[0]) / (q[2] - q[1]))
    return alphas, np.array(nu)


def _quantile_start(x):
    q05, q25, q50, q75, q95 = np.quantile(x, _QUANTILES)
    iqr = q75 - q25
    if iqr <= 0:
        raise DegenerateDataError("sample interquartile range is zero")
    alphas, nu = _alpha_lookup()
    nu_hat = (q95 - q05) / iqr
    # nu decreases in alpha
    alpha = float(np.interp(nu_hat, nu[::-1], alphas[::-1]))
    alpha = min(max(alpha, ALPHA_FLOOR), 2.0)
    beta = 0.0
    if alpha < 1.95:
        betas = np.linspace(-1, 1, 9)
        nub = []
        for b in betas:
            qq = ppf(np.array([0.05, 0.5, 0.95]), StableParams(alpha, float(b)))
            nub.append((qq[2] + qq[0] - 2 * qq[1]) / (qq[2] - qq[0]))
        nub = np.array(nub)
        nub_hat = (q95 + q05 - 2 * q50) / (q95 - q05)
        if np.all(np.diff(nub) > 0):
            beta = float(np.interp(nub_hat, nub, betas))
    std = ppf(np.array([0.25, 0.5, 0.75]), StableParams(alpha, beta))
    sigma = iqr / (std[2] - std[0])
    mu = q50 - sigma * std[1]
    return alpha, beta, sigma, mu


def _neg_loglik(theta, x):
    a, b, log_s, m = theta
    a = min(max(a, ALPHA_FLOOR), 2.0)
    b = min(max(b, -1.0), 1.0)
    try:
        params = StableParams(a, b, math.exp(log_s), m)
        return -float(np.mean(logpdf(x, params)))
    except (ParameterError, NumericalError, OverflowError):
        return np.inf


def fit(samples):
    """Maximum-likelihood stable fit with a quantile-matching start.

    Returns a :class:`FitResult`; ``alpha`` is confined to ``[0.5, 2]``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if x.size < 100:
        raise ParameterError("fitting needs at least 100 finite samples")
    if np.ptp(x) == 0:
        raise DegenerateDataError("all samples are equal")
    a0, b0, s0, m0 = _quantile_start(x)
    start = np.array([a0, b0, math.log(s0), m0])
    simplex = np.vstack([start] + [start + d for d in np.diag([0.05, 0.1, 0.05, 0.05 * s0])])
    simplex[:, 0] = np.minimum(simplex[:, 0], 2.0)
    simplex[:, 1] = np.clip(simplex[:, 1], -1.0, 1.0)
    res = optimize.minimize(
        _neg_loglik,
        start,
        args=(x,),
        method="Nelder-Mead",
        bounds=[(ALPHA_FLOOR, 2.0), (-1.0, 1.0), (None, None), (None, None)],
        options={"initial_simplex": simplex, "xatol": 1e-4, "fatol": 1e-8, "maxiter": 600},
    )
    a, b, log_s, m = (float(v) for v in res.x)
    a = min(max(a, ALPHA_FLOOR), 2.0)
    b = 0.0 if a == 2.0 else min(max(b, -1.0), 1.0)
    params = StableParams(a, b, math.exp(log_s), m)
    ks, p = ks_test(x, params)
    return FitResult(params, float(np.sum(logpdf(x, params))), int(x.size), ks, p)


def fit_gaussian(samples):
    """Closed-form Gaussian maximum likelihood, expressed as ``S_2(sigma, mu)``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ParameterError("need at least two samples")
    if np.ptp(x) == 0:
        raise DegenerateDataError("all samples are equal")
    sd = float(np.std(x))
    params = StableParams(2.0, 0.0, sd / math.sqrt(2.0), float(np.mean(x)))
    ll = float(np.sum(stats.norm.logpdf(x, params.mu, sd)))
    ks, p = ks_test(x, params)
    return FitResult(params, ll, int(x.size), ks, p)


def ks_test(samples, params):
    """Kolmogorov-Smirnov distance to ``params`` and its asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 10:
        raise ParameterError("KS test needs at least 10 samples")
    F = cdf(x, params)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    d = min(max(d, 0.0), 1.0)
    p = float(stats.kstwobign.sf(math.sqrt(n) * d))
    return d, min(max(p, 0.0), 1.0)
