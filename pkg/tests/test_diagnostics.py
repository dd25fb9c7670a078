import math

import numpy as np
import pytest

from ladcurves.dgp import DesignSpec, ErrorModel, TrueCurves, default_curves, synthesize_dataset
from ladcurves.diagnostics import (EmpiricalProcessFrame, centering_mc, coupling_lag_rule, eval_F,
                                   loglog_slope, modulus_of_continuity, phi_n, process_weights,
                                   sup_coupling_discrepancy)
from ladcurves.exceptions import ConfigurationError, DataError

X_GRID = np.linspace(0.15, 0.85, 8)


@pytest.fixture(scope="module")
def frame():
    return EmpiricalProcessFrame.simulate(DesignSpec.balanced(10, 30), default_curves(),
                                          ErrorModel.noncausal_linear(0.5), 2, 0.1, seed=3)


def test_eval_F_limits_and_monotone(frame):
    ys = frame.responses()
    w = process_weights(frame, 0.4)[0]
    assert eval_F(frame, 0.4, ys.min() - 1) == 0.0
    assert eval_F(frame, 0.4, ys.max()) == pytest.approx(w.sum())
    grid = np.sort(ys)
    vals = [eval_F(frame, 0.4, y) for y in grid[::7]]
    assert np.all(np.diff(vals) >= 0) and vals[-1] <= w.sum() + 1e-12


def test_single_observation():
    c = TrueCurves.constant()
    d = synthesize_dataset([np.array([0.5])], c, ErrorModel.iid(), seed=0, domain=(0, 1))
    f = EmpiricalProcessFrame(d, d, 0.2)
    y = d.subjects[0].y[0]
    assert eval_F(f, 0.45, y) == pytest.approx(0.75 * (1 - 0.25 ** 2))
    assert eval_F(f, 0.45, y - 1e-9) == 0.0


def test_identical_datasets_zero(frame):
    same = EmpiricalProcessFrame(frame.dataset, frame.dataset, 0.1)
    assert sup_coupling_discrepancy(same, X_GRID) == 0.0


def test_mdependent_coupling_zero_beyond_m():
    f = EmpiricalProcessFrame.simulate(DesignSpec.balanced(10, 30), default_curves(),
                                       ErrorModel.m_dependent(2), 2, 0.1, seed=1)
    assert sup_coupling_discrepancy(f, X_GRID) == 0.0


def test_sup_matches_brute_force_and_grid_refinement(frame):
    y0, y1 = frame.responses(False), frame.responses(True)
    jumps = np.union1d(y0, y1)
    brute = max(abs(eval_F(frame, x, y) - eval_F(frame, x, y, True)) for x in X_GRID[:3] for y in jumps)
    fast = sup_coupling_discrepancy(frame, X_GRID[:3])
    assert fast == pytest.approx(brute, abs=1e-12)
    extra = np.linspace(-5, 5, 1001)
    assert sup_coupling_discrepancy(frame, X_GRID[:3], extra) == fast


def test_frame_requires_shared_design(frame):
    other = synthesize_dataset(DesignSpec.balanced(10, 31), default_curves(), ErrorModel.iid(), seed=0)
    with pytest.raises(DataError):
        EmpiricalProcessFrame(frame.dataset, other, 0.1)
    with pytest.raises(ConfigurationError):
        EmpiricalProcessFrame(frame.dataset, None, 0.0)


def test_modulus_zero_delta_and_validation(frame):
    assert modulus_of_continuity(frame, 0.0, X_GRID, [0.0]) == 0.0
    with pytest.raises(ConfigurationError):
        modulus_of_continuity(frame, -0.1, X_GRID, [0.0])
    bare = EmpiricalProcessFrame(frame.dataset, None, 0.1)
    with pytest.raises(ConfigurationError):
        modulus_of_continuity(bare, 0.1, X_GRID, [0.0])


def test_shift_beyond_range_cancels(frame):
    # both thresholds above every response: F and E F equal the total weight
    top = frame.responses().max() + 50
    val, det = modulus_of_continuity(frame, 0.5, X_GRID, [top], replications=20, return_details=True)
    assert val <= 3 * det["centering_se"] + 1e-9


def test_mc_centering_matches_exact_law(frame):
    W = process_weights(frame, X_GRID[:3])
    ys = np.linspace(-1, 1, 5)
    mean, se = centering_mc(frame.truth, W, ys, replications=200, seed=1)
    from ladcurves.diagnostics import _centering_exact
    exact, _ = _centering_exact(frame, W, ys)
    assert np.all(np.abs(mean - exact) <= 4 * se + 1e-9)


def test_centred_increment_averages_to_zero(frame):
    # centring correctness: D averaged over fresh replications is ~0
    W = process_weights(frame, [0.5])
    ys = np.array([0.0, 0.2])
    mean, _ = centering_mc(frame.truth, W, ys, replications=200, seed=7)
    Ds = []
    for r in range(200):
        d = synthesize_dataset(list(frame.truth.design), frame.truth.curves, frame.truth.model,
                               seed=10_000 + r, domain=frame.truth.domain)
        F = W @ (d.pooled[1][:, None] <= ys).astype(float)
        Ds.append(((F - mean)[0, 1] - (F - mean)[0, 0]))
    Ds = np.asarray(Ds)
    assert abs(Ds.mean()) <= 3 * Ds.std(ddof=1) / math.sqrt(Ds.size) * math.sqrt(2)


def test_phi_n_and_helpers(frame):
    W = process_weights(frame, X_GRID)
    assert phi_n(frame, X_GRID) == pytest.approx(np.max(np.sum(W ** 2, axis=1)))
    assert coupling_lag_rule(1000, 2.0) == math.floor(2 * math.log(1000))
    assert loglog_slope([1, 2, 4], [3, 3 * 2 ** 0.5, 6]) == pytest.approx(0.5)
