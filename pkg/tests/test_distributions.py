import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idabounds.classifiers import HypothesisGrid, ThresholdClassifier
from idabounds.distributions import (BinnedDensity1D, BinnedJoint1D, EmpiricalDataset, ImportanceWeightMap,
                                     LabelMarginal, LabeledPoint, class_conditional_risks, disagreement,
                                     empirical_risk, feature_tv, grid_profile, h_divergence, importance_weights,
                                     prediction_marginal, rates, reweighted_risk, tv_binary, tv_binned)
from idabounds.errors import InvalidConfig, MismatchedBins, MissingClass, UnsupportedShift
from idabounds.shifts import StrategicShift, StrategicConfig, strategic_induced_density, strategic_source


def _sup_over_events(p, q):
    """Largest probability gap over every subset of the outcome space."""
    n = len(p)
    best = 0.0
    for r in range(n + 1):
        for S in itertools.combinations(range(n), r):
            best = max(best, abs(sum(p[i] for i in S) - sum(q[i] for i in S)))
    return best


def test_tv_binary_examples():
    assert tv_binary(LabelMarginal(0.5), LabelMarginal(0.5)) == 0
    assert tv_binary(LabelMarginal(0.0), LabelMarginal(1.0)) == 1
    assert tv_binary(LabelMarginal(0.3), LabelMarginal(0.5)) == pytest.approx(_sup_over_events((0.3, 0.7), (0.5, 0.5)))


def test_tv_binned_examples():
    f = BinnedDensity1D(0, 1, [0.6, 0.4])
    g = BinnedDensity1D(0, 1, [0.4, 0.6])
    assert tv_binned(f, f) == 0
    assert tv_binned(f, g) == pytest.approx(_sup_over_events(f.mass, g.mass)) == pytest.approx(0.2)
    assert tv_binned(BinnedDensity1D(0, 1, [1, 0]), BinnedDensity1D(0, 1, [0, 1])) == 1
    with pytest.raises(MismatchedBins):
        tv_binned(f, BinnedDensity1D(0, 2, [0.5, 0.5]))


masses = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(lambda v: np.array(v) / sum(v))


@given(masses, masses, masses)
def test_tv_metric_properties(a, b, c):
    A, B, C = (BinnedDensity1D(0, 1, m) for m in (a, b, c))
    assert tv_binned(A, B) == pytest.approx(tv_binned(B, A), abs=1e-12)
    assert tv_binned(A, B) >= 0
    assert tv_binned(A, C) <= tv_binned(A, B) + tv_binned(B, C) + 1e-12
    pa, pb, pc = (LabelMarginal(m[0]) for m in (a, b, c))
    assert tv_binary(pa, pc) <= tv_binary(pa, pb) + tv_binary(pb, pc) + 1e-12
    assert tv_binary(pa, pb) == tv_binary(pb, pa)


def test_type_invariants():
    with pytest.raises(InvalidConfig):
        BinnedDensity1D(0, 1, [1.0])
    with pytest.raises(InvalidConfig):
        BinnedDensity1D(1, 0, [0.5, 0.5])
    with pytest.raises(InvalidConfig):
        BinnedDensity1D(0, 1, [0.5, 0.6])
    with pytest.raises(InvalidConfig):
        LabelMarginal(1.2)
    with pytest.raises(InvalidConfig):
        LabeledPoint((0.1,), 0)
    with pytest.raises(InvalidConfig):
        EmpiricalDataset(np.zeros((0, 1)), np.zeros(0))
    with pytest.raises(InvalidConfig):
        ImportanceWeightMap(0, 1, [1.0, 2.0], [0.5, 0.5])


def test_points_roundtrip():
    pts = [LabeledPoint((0.1, 0.2), 1, 0), LabeledPoint((0.3, 0.4), -1, 1)]
    D = EmpiricalDataset.from_points(pts)
    assert D.points == pts
    with pytest.raises(InvalidConfig):
        EmpiricalDataset.from_points([LabeledPoint((0.1,), 1), LabeledPoint((0.1, 0.2), 1)])


def test_empirical_risk_examples():
    x = np.linspace(0, 1, 10)[:, None]
    y = np.array([-1] * 7 + [1] * 3)
    D = EmpiricalDataset(x, y)
    const_pos = ThresholdClassifier(-1.0)
    assert empirical_risk(const_pos, D) == pytest.approx(7 / 10)
    perfect = ThresholdClassifier(0.7)
    assert empirical_risk(perfect, D) == 0
    flipped = EmpiricalDataset(x, -y)
    assert empirical_risk(perfect, flipped) == 1


def test_rates_and_class_risks():
    x = np.linspace(0.05, 0.95, 20)[:, None]
    y = np.where(x[:, 0] > 0.5, 1, -1)
    D = EmpiricalDataset(x, y)
    assert rates(ThresholdClassifier(0.5), D) == (1.0, 0.0)
    assert rates(ThresholdClassifier(-1.0), D) == (1.0, 1.0)
    assert rates(ThresholdClassifier(2.0), D) == (0.0, 0.0)
    assert class_conditional_risks(ThresholdClassifier(0.5), D) == (0.0, 0.0)
    assert class_conditional_risks(ThresholdClassifier(-1.0), D) == (0.0, 1.0)
    # TPR 0.9 and TNR 0.8 built by hand: 10 positives, 10 negatives
    xs = np.r_[np.full(9, 0.9), 0.1, np.full(2, 0.9), np.full(8, 0.1)][:, None]
    ys = np.r_[np.ones(10), -np.ones(10)]
    e_plus, e_minus = class_conditional_risks(ThresholdClassifier(0.5), EmpiricalDataset(xs, ys))
    assert (e_plus, e_minus) == pytest.approx((0.1, 0.2))
    with pytest.raises(MissingClass):
        rates(ThresholdClassifier(0.5), EmpiricalDataset(x, np.ones(20)))


@given(st.floats(0, 1), st.integers(0, 2**31))
@settings(max_examples=50)
def test_risk_decomposition(tau, seed):
    rng = np.random.default_rng(seed)
    x = rng.random(200)
    y = np.where(rng.random(200) < x, 1, -1)
    y[:2] = (1, -1)
    D = EmpiricalDataset(x[:, None], y)
    J = strategic_source(64)
    h = ThresholdClassifier(tau)
    for dist in (D, J):
        p = dist.label_marginal().p_plus
        ep, em = class_conditional_risks(h, dist)
        assert empirical_risk(h, dist) == pytest.approx(p * ep + (1 - p) * em, abs=1e-12)


def _uniform_on(lo, hi, K=4):
    e = np.linspace(0, 1, K + 1)
    overlap = np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0, None)
    m = overlap / overlap.sum()
    return BinnedJoint1D(0, 1, m / 2, m / 2)


def _interval_disagreement(t1, t2, lo, hi):
    a, b = min(t1, t2), max(t1, t2)
    return max(0.0, min(b, hi) - max(a, lo)) / (hi - lo)


def test_h_divergence_example_brute_force():
    grid = HypothesisGrid((0.25, 0.5, 0.75))
    D, D2 = _uniform_on(0, 0.5), _uniform_on(0.5, 1)
    brute = 2 * max(abs(_interval_disagreement(a, b, 0, 0.5) - _interval_disagreement(a, b, 0.5, 1))
                    for a in grid.taus for b in grid.taus)
    assert h_divergence(D, D2, grid) == pytest.approx(brute, abs=1e-12)
    assert h_divergence(D, D2, grid) == pytest.approx(1.0)
    assert h_divergence(D, D2, grid) == pytest.approx(h_divergence(D2, D, grid))
    assert h_divergence(D, D, grid) == 0
    assert h_divergence(D, D2, HypothesisGrid((0.5,))) == 0


def test_h_divergence_matches_pairwise_disagreement_on_samples(rng):
    D = EmpiricalDataset(rng.random(300)[:, None], np.where(rng.random(300) < 0.5, 1, -1))
    D2 = EmpiricalDataset(rng.beta(2, 5, 250)[:, None], np.where(rng.random(250) < 0.5, 1, -1))
    grid = HypothesisGrid.uniform(21)
    brute = 2 * max(abs(disagreement(a, b, D) - disagreement(a, b, D2)) for a in grid for b in grid)
    assert h_divergence(D, D2, grid) == pytest.approx(brute, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=8, unique=True), st.floats(0, 1), st.integers(0, 1000))
@settings(max_examples=40)
def test_h_divergence_range_and_monotone(taus, extra, seed):
    rng = np.random.default_rng(seed)
    D = EmpiricalDataset(rng.random(100)[:, None], np.where(rng.random(100) < 0.5, 1, -1))
    D2 = EmpiricalDataset(rng.random(80)[:, None] ** 2, np.where(rng.random(80) < 0.5, 1, -1))
    small = HypothesisGrid(tuple(sorted(taus)))
    big = HypothesisGrid(tuple(sorted(set(taus) | {extra})))
    d_small, d_big = h_divergence(D, D2, small), h_divergence(D, D2, big)
    assert 0 <= d_small <= 2
    assert d_small <= d_big + 1e-12


def test_importance_weight_examples():
    src = BinnedDensity1D(0, 1, [0.5, 0.5])
    assert np.all(importance_weights(src, src).omega == 1)
    w = importance_weights(src, BinnedDensity1D(0, 1, [0.0, 1.0]))
    assert tuple(w.omega) == (0.0, 2.0)
    with pytest.raises(UnsupportedShift):
        importance_weights(BinnedDensity1D(0, 1, [1.0, 0.0]), BinnedDensity1D(0, 1, [0.5, 0.5]))
    both_zero = importance_weights(BinnedDensity1D(0, 1, [1.0, 0.0, 0.0]), BinnedDensity1D(0, 1, [1.0, 0.0, 0.0]))
    assert both_zero.omega[1] == 0


def test_reweighted_risk_identity_weights():
    J = strategic_source(64)
    h = ThresholdClassifier(0.37)
    assert reweighted_risk(h, J, ImportanceWeightMap.constant_one(J.marginal)) == pytest.approx(
        empirical_risk(h, J), abs=1e-15)


def test_reweighted_risk_matches_strategic_induced_risk():
    tau, B = 0.5, 0.2
    src = strategic_source(512)
    h = ThresholdClassifier(tau)
    induced = StrategicShift(StrategicConfig(B)).induce(src, h)
    w = importance_weights(src.marginal, strategic_induced_density(tau, B, 512))
    assert abs(reweighted_risk(h, src, w) - empirical_risk(h, induced)) <= 1e-9


def test_reweighted_risk_bin_doubling():
    J = BinnedJoint1D(0, 1, [0.1, 0.1, 0.3, 0.2], [0.2, 0.05, 0.0, 0.05])
    h = ThresholdClassifier(0.5)
    e = J.edges
    f = h.accept_fraction(e[:-1], e[1:])
    err_bin = J.mass_pos * (1 - f) + J.mass_neg * f
    m = J.mass_pos + J.mass_neg
    mis = err_bin > 0.5 * m
    raw = np.where(mis, 2.0, 0.5)
    omega = raw / np.sum(raw * m)
    brute = sum(omega[k] * err_bin[k] for k in range(4))
    got = reweighted_risk(h, J, ImportanceWeightMap(0, 1, omega, m))
    assert got == pytest.approx(brute, abs=1e-15)
    with pytest.raises(MismatchedBins):
        reweighted_risk(h, J, ImportanceWeightMap(0, 1, [1.0, 1.0], [0.5, 0.5]))


def test_reweighted_risk_sampled_within_three_sigma():
    tau, B, n = 0.5, 0.2, 100_000
    src = strategic_source(512)
    h = ThresholdClassifier(tau)
    w = importance_weights(src.marginal, strategic_induced_density(tau, B, 512))
    S = src.sample(n, np.random.default_rng(4))
    per = w.at(S.x[:, 0]) * (h.predict_batch(S.x) != S.y)
    exact = empirical_risk(h, StrategicShift(StrategicConfig(B)).induce(src, h))
    assert abs(per.mean() - exact) <= 3 * per.std() / np.sqrt(n)


def test_sample_grid_profile_matches_direct_counts(rng):
    D = EmpiricalDataset(rng.random((150, 1)), np.where(rng.random(150) < 0.4, 1, -1))
    grid = HypothesisGrid.uniform(31)
    prof = grid_profile(D, grid)
    direct = np.array([empirical_risk(h, D) for h in grid])
    assert np.allclose(prof.errors, direct, atol=1e-12)


def test_binned_grid_profile_matches_single_classifier():
    J = strategic_source(128)
    grid = HypothesisGrid.uniform(41)
    prof = grid_profile(J, grid)
    assert np.allclose(prof.errors, [empirical_risk(h, J) for h in grid], atol=1e-13)
    assert np.allclose(prof.tpr, [rates(h, J)[0] for h in grid], atol=1e-13)


def test_data_processing_binned_and_sampled(rng):
    src = strategic_source(256)
    grid = HypothesisGrid.uniform(201).restrict(0.2, 0.8)
    model = StrategicShift(StrategicConfig(0.2))
    for h in grid:
        Dh = model.induce(src, h)
        pred_tv = tv_binary(prediction_marginal(h, src), prediction_marginal(h, Dh))
        assert pred_tv <= feature_tv(src, Dh) + 1e-9
    S = src.sample(2000, rng)
    for i, h in enumerate(grid):
        Dh = model.induce(S, h, seed=i)
        pred_tv = tv_binary(prediction_marginal(h, S), prediction_marginal(h, Dh))
        assert pred_tv <= feature_tv(S, Dh, grid) + 1e-9
