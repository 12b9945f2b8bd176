import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from levymf import meanfield as mf
from levymf import network as nw
from levymf.errors import BracketError, ParameterError
from levymf.stable import standard_variates


def gauss_hermite_map(q, Dw, Db=0.0, n=200):
    """Independent oracle: Dw E[tanh(z)^2] + Db, z ~ N(0, q)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return Dw * float(np.sum(w * np.tanh(math.sqrt(q) * x) ** 2) / math.sqrt(2 * math.pi)) + Db


@pytest.mark.parametrize("q", [1e-3, 0.3, 1.0, 4.0])
def test_gaussian_map_matches_hermite_oracle(q):
    assert mf.q_map(q, 2.0, 1.3, 0.05) == pytest.approx(gauss_hermite_map(q, 1.3, 0.05), abs=1e-6)


@pytest.mark.parametrize("alpha", [1.2, 1.5])
def test_heavy_tailed_map_matches_monte_carlo(alpha):
    rng = np.random.default_rng(0)
    q = 0.7
    h = (q / 2) ** (1 / alpha) * standard_variates(alpha, 0.0, 2_000_000, rng)
    mc = np.mean(np.abs(np.tanh(h)) ** alpha)
    assert mf.activation_moment(q, alpha) == pytest.approx(mc, abs=2e-3)


def test_zero_input_maps_to_bias():
    assert mf.q_map(0.0, 1.5, 2.0, 0.0) == 0.0
    assert mf.q_map(0.0, 1.5, 2.0, 0.3) == 0.3


def test_gaussian_linearization_near_zero():
    q = 1e-6
    assert mf.q_map(q, 2.0, 1.7) == pytest.approx(1.7 * q, rel=1e-4)


def test_heavy_tailed_map_is_superlinear_near_zero():
    # for alpha < 2 the map grows like q log(1/q): the zero fixed point is unstable for any Dw
    q = 1e-8
    assert mf.q_map(q, 1.5, 0.5) > q


@given(st.floats(1.0, 2.0), st.floats(0.1, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_map_is_monotone_and_bounded(alpha, Dw, q1, q2):
    lo, hi = sorted((q1, q2))
    a, b = mf.q_map(lo, alpha, Dw), mf.q_map(hi, alpha, Dw)
    assert a <= b + 1e-12
    assert b <= Dw + 1e-12


def test_fixed_point_initial_condition():
    traj = mf.fixed_point(1.5, 1.3, 0.2, q0=0.7)
    assert traj.q[1] == 1.3 * 0.7 + 0.2
    assert traj.converged


def test_fixed_point_below_and_above_gaussian_transition():
    assert mf.fixed_point(2.0, 0.5).qstar < 1e-8
    oracle = optimize.brentq(lambda q: gauss_hermite_map(q, 2.0) - q, 0.1, 2.0)
    assert mf.fixed_point(2.0, 2.0).qstar == pytest.approx(oracle, rel=1e-6)


def test_gaussian_transition_and_threshold_limit():
    assert mf.ordered_transition(2.0) == pytest.approx(1.0, abs=0.05)
    assert mf.ordered_transition(2.0, threshold=1e-4) == pytest.approx(1.0, abs=0.002)


def test_transition_line_is_monotone():
    rows = mf.transition_line([1.0, 1.2, 1.5, 1.8, 2.0])
    dws = [r[1] for r in rows]
    assert all(a < b for a, b in zip(dws, dws[1:]))
    assert all(r[2] == pytest.approx(0.01, rel=1e-3) for r in rows)


def test_bracket_error():
    with pytest.raises(BracketError):
        mf.ordered_transition(2.0, Db=0.5)


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        mf.q_map(-1.0, 1.5, 1.0)
    with pytest.raises(ParameterError):
        mf.fixed_point(3.0, 1.0)
    with pytest.raises(ParameterError):
        mf.ordered_transition(1.5, threshold=0.0)


def test_empirical_q_is_consistent_for_heavy_tails():
    rng = np.random.default_rng(1)
    for alpha in (1.2, 1.7, 2.0):
        h = (0.8 / 2) ** (1 / alpha) * standard_variates(alpha, 0.0, 200_000, rng)
        assert mf.empirical_q(h, alpha) == pytest.approx(0.8, rel=0.02)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
def test_simulated_network_follows_the_map(alpha):
    N, L = 5000, 5
    spec = nw.NetworkSpec(alpha=alpha, Dw=1.5**alpha, N=N, L=L)
    x0 = np.random.default_rng(3).choice([-1.0, 1.0], N)  # q0 = 1 for every alpha
    q = mf.trajectory(alpha, spec.Dw, 0.0, 1.0, L)
    state = nw.forward(nw.init(spec, 3), x0)
    for l in range(1, L + 1):
        assert mf.empirical_q(state.h[l - 1], alpha) == pytest.approx(q[l], rel=0.1)
        assert mf.activation_q(state.x[l - 1], alpha, spec.Dw) == pytest.approx(q[l], rel=0.1)


@pytest.mark.parametrize("alpha", [1.2, 1.5])
def test_heavy_tailed_slope_grows_logarithmically(alpha):
    # E|tanh h|^alpha picks up a log(1/q) factor from the x^(-1-alpha) tail of h below |h| ~ 1
    slopes = [mf.q_map(q, alpha, 1.0) / q for q in (1e-4, 1e-6, 1e-8)]
    assert slopes[2] - slopes[1] == pytest.approx(slopes[1] - slopes[0], rel=0.02)
    assert slopes[1] > slopes[0] > 1
