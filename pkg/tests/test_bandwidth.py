import numpy as np
import pytest

from ladcurves.bandwidth import (CvConfig, cv_score, cv_terms, default_candidates, select_bandwidth,
                                 select_scale_bandwidth)
from ladcurves.dgp import Dataset, DesignSpec, ErrorModel, default_curves, synthesize_dataset
from ladcurves.estimate import fit_mu_jackknife
from ladcurves.exceptions import ConfigurationError, CvError, NoMassError


@pytest.fixture(scope="module")
def data():
    return synthesize_dataset(DesignSpec.balanced(8, 15), default_curves(), ErrorModel.iid(), seed=2)


def _brute(data, b, crit):
    loss, n = 0.0, 0
    for i, s in enumerate(data.subjects):
        rest = data.without(i)
        for x, y in zip(s.x, s.y):
            try:
                r = y - fit_mu_jackknife(rest, x, b)
            except NoMassError:
                continue
            loss += abs(r) if crit == "LAD" else r * r
            n += 1
    return loss / n


@pytest.mark.parametrize("crit", ["LAD", "LS"])
def test_cv_score_matches_refit_per_subject(data, crit):
    assert cv_score(data, 0.12, crit) == pytest.approx(_brute(data, 0.12, crit), rel=1e-12)


def test_subsampled_and_approximate(data):
    _, scored, _ = cv_terms(data, 0.12, max_subjects=3)
    assert scored == 3 * 15
    exact = cv_score(data, 0.12)
    approx = cv_score(data, 0.12, approximate=True, approx_grid_size=401)
    assert approx == pytest.approx(exact, rel=0.1)


def test_select_bandwidth_returns_argmin(data):
    cands = np.array([0.05, 0.1, 0.2])
    b, table = select_bandwidth(data, CvConfig(candidate_bandwidths=cands))
    np.testing.assert_array_equal(table[:, 0], cands)
    assert b == cands[np.argmin(table[:, 1])]


def test_ties_go_to_smaller_bandwidth():
    xs = [np.linspace(0, 1, 30) for _ in range(3)]
    d = Dataset.from_arrays(xs, [np.ones(30)] * 3, domain=(0, 1))
    b, table = select_bandwidth(d, CvConfig(candidate_bandwidths=[0.1, 0.2, 0.3]))
    assert np.all(table[:, 1] == 0) and b == 0.1


def test_default_candidates(data):
    c = default_candidates(data)
    assert c.size == 12 and c[0] == pytest.approx(2 / 120) and c[-1] == pytest.approx(0.25)


def test_errors(data):
    with pytest.raises(CvError):
        cv_score(Dataset((data.subjects[0],), data.domain), 0.1)
    with pytest.raises(ConfigurationError):
        CvConfig(criterion="L2")
    with pytest.raises(ConfigurationError):
        CvConfig(candidate_bandwidths=[0.2, 0.1])
    with pytest.raises(ConfigurationError):
        select_bandwidth(data, CvConfig(candidate_bandwidths=[0.1, 0.6]))
    with pytest.raises(CvError):
        select_bandwidth(data, CvConfig(candidate_bandwidths=[1e-6]))


def test_scale_bandwidth_runs(data):
    h, table = select_scale_bandwidth(data, 0.1, CvConfig(candidate_bandwidths=[0.05, 0.1, 0.2]))
    assert h in (0.05, 0.1, 0.2) and np.all(np.isfinite(table[:, 1]))


def test_selected_bandwidth_near_plug_in_optimum():
    from ladcurves.asym import TheoryContext, integrated_optimal_bandwidth

    curves, model = default_curves(), ErrorModel.iid()
    ref = integrated_optimal_bandwidth(TheoryContext.from_model(curves, model), 2000, np.linspace(0.1, 0.9, 81))
    picks = [select_bandwidth(synthesize_dataset(DesignSpec.balanced(40, 50), curves, model, seed=r))[0]
             for r in range(20)]
    assert ref / 2 <= np.median(picks) <= 2 * ref
