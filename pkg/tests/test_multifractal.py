import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levymf import multifractal as mfr
from levymf.errors import DegenerateDataError, ParameterError, ProtocolError

SIZES = [64, 128, 256, 512, 1024]


def test_ipr_baselines():
    N = 64
    assert mfr.ipr(np.full(N, 1 / np.sqrt(N)), 2) == pytest.approx(1 / N)
    e = np.zeros(N)
    e[3] = 1
    for q in (0.5, 2, 4):
        assert mfr.ipr(e, q) == pytest.approx(1.0)
    v = np.random.default_rng(0).standard_normal(N) + 1j
    assert mfr.ipr(v, 1) == pytest.approx(1.0)
    with pytest.raises(DegenerateDataError):
        mfr.ipr(np.zeros(4), 2)


@given(arrays(float, 12, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(0.2, 3), st.floats(0.2, 3))
def test_ipr_nonincreasing_in_q(v, q1, q2):
    lo, hi = sorted((q1, q2))
    assert mfr.ipr(v, hi) <= mfr.ipr(v, lo) * (1 + 1e-12)


def delocalized(rng):
    return {n: np.exp(2j * np.pi * rng.random((n, 20))) / np.sqrt(n) for n in SIZES}


@pytest.mark.parametrize("q", [2, 3])
def test_delocalized_vectors_have_unit_dimension(q, rng):
    est = mfr.fractal_dimension(delocalized(rng), q)
    assert est.Dq_mean == pytest.approx(1.0, abs=0.05)
    assert est.reported


def test_localized_vectors_have_zero_dimension():
    ens = {n: np.eye(n)[:, :10] for n in SIZES}
    est = mfr.fractal_dimension(ens, 2)
    assert est.Dq_mean == pytest.approx(0.0, abs=0.05)


def test_phase_rotation_invariance(rng):
    ens = {n: rng.standard_normal((n, 8)) for n in SIZES}
    rot = {n: v * np.exp(1j * 0.7) for n, v in ens.items()}
    assert mfr.fractal_dimension(ens, 2).Dq_mean == pytest.approx(mfr.fractal_dimension(rot, 2).Dq_mean, rel=1e-12)


def test_protocol_errors(rng):
    ens = delocalized(rng)
    with pytest.raises(ProtocolError):
        mfr.fractal_dimension({n: ens[n] for n in SIZES[:3]}, 2)
    with pytest.raises(ProtocolError):
        mfr.fractal_dimension({n: np.eye(n)[:, :2] for n in (100, 200, 300, 400)}, 2)
    with pytest.raises(ParameterError):
        mfr.fractal_dimension(ens, 1)


def test_gaussian_jacobian_eigenvectors_are_delocalized():
    est = mfr.dq_spectrum(2.0, 1.5**2, [2.0], [32, 64, 128, 320], {32: 20, 64: 10, 128: 5, 320: 2}, seed=0)
    assert est[0].Dq_mean == pytest.approx(1.0, abs=0.1)


def test_annulus_filter():
    v_all = mfr.jacobian_eigenvectors(1.5, 1.0, 60, seed=1)
    v_out = mfr.jacobian_eigenvectors(1.5, 1.0, 60, seed=1, annulus=(0.5, np.inf))
    assert v_all.shape[1] == 60 and 0 < v_out.shape[1] < 60


def test_dq_grid_matches_single_cells():
    sizes, reps = [32, 64, 128, 320], {32: 10, 64: 5, 128: 3, 320: 1}
    grid = mfr.dq_grid([1.2, 2.0], [1.5], [2.0], sizes, reps, seed=5)
    assert not grid.errors and grid.Dq.shape == (2, 1, 1)
    assert grid.Dq[0, 0, 0] < grid.Dq[1, 0, 0]
    assert grid.transition[1] == pytest.approx(1.0, abs=0.05)
    again = mfr.dq_grid([1.2, 2.0], [1.5], [2.0], sizes, reps, seed=5, workers=2)
    np.testing.assert_array_equal(again.Dq, grid.Dq)
    assert len(list(grid.rows())) == 2
    with pytest.raises(ProtocolError):
        mfr.dq_grid([2.0], [1.0], [2.0], [32, 64, 128, 256], 1, seed=0)
