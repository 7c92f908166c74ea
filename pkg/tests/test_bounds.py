import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idabounds.bounds import (cs_assumption_check, cs_covariance, cs_lb_positive, cs_ub_suboptimality,
                              convexity_condition_check, lb_tradeoff, lb_tradeoff_features, replicator_prop_bound,
                              strategic_ub, ts_lb, ts_ub, ub_induced_to_optimal, ub_source_to_induced,
                              worst_case_bounds)
from idabounds.classifiers import HypothesisGrid, LinearScorer, ThresholdClassifier
from idabounds.distributions import (BinnedDensity1D, BinnedJoint1D, EmpiricalDataset, ImportanceWeightMap,
                                     LabelMarginal, empirical_risk, importance_weights, prediction_marginal, rates,
                                     tv_binary)
from idabounds.errors import AssumptionsUnmet, DegenerateAccuracy
from idabounds.shifts import (LabelConditional, ReplicatorConfig, ReplicatorShift, StrategicShift,
                              StrategicConfig, fitness_accuracy, replicator_induce, strategic_induced_density,
                              strategic_source, strategic_weight_moments)

K = 400
GRID = HypothesisGrid.uniform(41)


def _strategic(tau, B, conditional=LabelConditional()):
    src = strategic_source(K, conditional)
    h = ThresholdClassifier(tau)
    return src, h, StrategicShift(StrategicConfig(B), conditional).induce(src, h)


# --- upper bounds ----------------------------------------------------------


def test_ub_source_to_induced_no_shift():
    src, h, _ = _strategic(0.5, 0.2)
    lam = min(2 * empirical_risk(g, src) for g in GRID)
    assert ub_source_to_induced(h, src, src, GRID) == pytest.approx(empirical_risk(h, src) + lam, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(GRID.taus[8:33]), st.sampled_from([0.05, 0.1, 0.2]))
def test_upper_bounds_dominate_on_strategic(tau, B):
    src, h, Dh = _strategic(tau, B)
    err_h = empirical_risk(h, Dh)
    assert err_h <= ub_source_to_induced(h, src, Dh, GRID) + 1e-9
    hT = ThresholdClassifier(0.5)
    DT = StrategicShift(StrategicConfig(B)).induce(src, hT)
    gap = err_h - empirical_risk(hT, DT)
    assert gap <= ub_induced_to_optimal(h, Dh, hT, DT, GRID) + 1e-9


def test_ub_induced_to_optimal_same_classifier():
    src, h, Dh = _strategic(0.45, 0.1)
    assert ub_induced_to_optimal(h, Dh, h, Dh, GRID) >= 0


def test_ub_induced_to_optimal_identical_distributions():
    src, h, _ = _strategic(0.5, 0.1)
    hT = ThresholdClassifier(0.6)
    lam = min(2 * empirical_risk(g, src) for g in GRID)
    expect = 0.5 * (lam + 2 * empirical_risk(h, src))
    assert ub_induced_to_optimal(h, src, hT, src, GRID) == pytest.approx(expect, abs=1e-12)


# --- lower bounds ----------------------------------------------------------


def test_lb_tradeoff_arithmetic():
    # two-bin joint: label prior moves by 0.4, acceptance moves by 0.2
    S = BinnedJoint1D(0.0, 1.0, np.array([0.1, 0.2]), np.array([0.4, 0.3]))
    T = BinnedJoint1D(0.0, 1.0, np.array([0.3, 0.4]), np.array([0.0, 0.3]))
    h = ThresholdClassifier(0.5)
    assert tv_binary(S.label_marginal(), T.label_marginal()) == pytest.approx(0.4)
    assert tv_binary(prediction_marginal(h, S), prediction_marginal(h, T)) == pytest.approx(0.2)
    assert lb_tradeoff(h, S, T) == pytest.approx(0.1)


def test_lb_no_shift_is_vacuous():
    src, h, _ = _strategic(0.5, 0.2)
    assert lb_tradeoff(h, src, src) <= 0
    assert lb_tradeoff_features(h, src, src) <= 0


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(GRID.taus[8:33]), st.sampled_from([0.05, 0.1, 0.2]))
def test_lower_bounds_on_strategic(tau, B):
    src, h, Dh = _strategic(tau, B)
    top = max(empirical_risk(h, src), empirical_risk(h, Dh))
    lb = lb_tradeoff(h, src, Dh)
    assert lb <= top + 1e-9
    assert lb_tradeoff_features(h, src, Dh) <= lb + 1e-9


def test_ts_lb_matches_lb_on_replicator():
    cfg = ReplicatorConfig(p0=0.4, U=((1.0, 0.5), (0.5, 1.0)))
    src = cfg.source(256)
    model = ReplicatorShift(cfg.U)
    for tau in (0.3, 0.5, 0.62):
        h = ThresholdClassifier(tau)
        Dh = model.induce(src, h)
        tpr, fpr = rates(h, src)
        got = ts_lb(src.p_plus, Dh.p_plus, tpr, fpr)
        assert got == pytest.approx(lb_tradeoff(h, src, Dh), abs=1e-9)
        assert got <= max(empirical_risk(h, src), empirical_risk(h, Dh)) + 1e-9


def test_ts_lb_examples():
    assert ts_lb(0.5, 0.7, 1.0, 0.0) == 0
    assert ts_lb(0.5, 0.7, 0.9, 0.2) == pytest.approx(0.03)
    assert ts_lb(0.4, 0.4, 0.9, 0.2) == 0


# --- covariate-shift bounds ------------------------------------------------


def _two_bin(eta, omega):
    S = BinnedJoint1D.from_conditional(BinnedDensity1D.uniform(2), np.asarray(eta))
    return S, ImportanceWeightMap(0.0, 1.0, np.asarray(omega, dtype=float), np.array([0.5, 0.5]))


def test_cs_ub_examples():
    S, w = _two_bin([0.09, 0.91], [0.6, 1.4])
    hT = ThresholdClassifier(0.5)
    assert empirical_risk(hT, S) == pytest.approx(0.09)
    assert w.sd() == pytest.approx(0.4)
    assert cs_ub_suboptimality(hT, hT, S, w, w) == pytest.approx(0.24)
    one = ImportanceWeightMap.constant_one(S.marginal)
    assert cs_ub_suboptimality(hT, hT, S, one, one) == 0
    perfect, _ = _two_bin([0.0, 1.0], [1, 1])
    assert cs_ub_suboptimality(hT, hT, perfect, w, w) == 0


@pytest.mark.parametrize("B", [0.05, 0.1, 0.2])
def test_strategic_ub_equals_specialized_cs_ub(B):
    err = 0.1
    _, var = strategic_weight_moments(0.5, B)
    cs = math.sqrt(err) * 2 * math.sqrt(var)
    assert strategic_ub(B, err) == pytest.approx(cs, abs=1e-9)


@pytest.mark.parametrize("B", [0.05, 0.1, 0.2])
def test_cs_ub_with_analytic_variance_is_twice_strategic_ub(B):
    err = 0.1
    _, var = strategic_weight_moments(0.5, B)
    assert math.sqrt(err) * 2 * math.sqrt(var) == pytest.approx(2 * strategic_ub(B, err), abs=1e-9)


def test_strategic_ub_examples():
    assert strategic_ub(0.0, 0.3) == 0
    assert strategic_ub(0.2, 0.0) == 0
    assert strategic_ub(0.15, 0.1) == pytest.approx(0.1)


def test_cs_assumptions_no_shift():
    S, _ = _two_bin([0.2, 0.8], [1, 1])
    one = ImportanceWeightMap.constant_one(S.marginal)
    h = ThresholdClassifier(0.5)
    assert cs_covariance(h, S, one) == pytest.approx(0, abs=1e-15)
    assert cs_assumption_check(h, S, one)[2] is False
    with pytest.raises(AssumptionsUnmet):
        cs_lb_positive(h, S, S)


def test_cs_assumptions_two_bin():
    S, w = _two_bin([0.2, 0.8], [0.5, 1.5])
    reject_all = ThresholdClassifier(1.0)
    assert cs_covariance(reject_all, S, w) == pytest.approx(0.15)
    assert cs_assumption_check(reject_all, S, w) == (True, True, True)
    Dh = BinnedJoint1D.from_conditional(BinnedDensity1D(0.0, 1.0, np.array([0.25, 0.75])), np.array([0.2, 0.8]))
    assert cs_lb_positive(reject_all, S, Dh) == pytest.approx(0.075)


@pytest.mark.parametrize("tau,B", [(0.6, 0.1), (0.7, 0.2), (0.55, 0.05)])
def test_strategic_covariance_is_negative_for_linear_conditional(tau, B):
    # the strategic weight rises exactly where the threshold starts accepting
    src = strategic_source(4000, LabelConditional("linear"))
    w = importance_weights(src.marginal, strategic_induced_density(tau, B, 4000))
    h = ThresholdClassifier(tau)
    assert cs_covariance(h, src, w) == pytest.approx(B * B / 3 - B / 2, abs=1e-5)
    assert cs_assumption_check(h, src, w)[2] is False


def test_cs_lb_positive_rejects_violations():
    src, h, Dh = _strategic(0.6, 0.2)
    with pytest.raises(AssumptionsUnmet):
        cs_lb_positive(h, src, Dh)


# --- target-shift bounds ---------------------------------------------------


def test_ts_ub_arithmetic():
    pos = BinnedDensity1D.uniform(10)
    neg = BinnedDensity1D.normalized(0.0, 1.0, [0.15, 0.15, 0.15, 0.15, 0.05, 0.05, 0.1, 0.1, 0.05, 0.05])
    S = BinnedJoint1D.from_class_conditionals(pos, neg, 0.5)
    hS, hT = ThresholdClassifier(0.4), ThresholdClassifier(0.6)
    assert ts_ub(hS, hT, S, (0.6, 0.5)) == pytest.approx(0.55)
    assert ts_ub(hS, hT, S, {hS: LabelMarginal(0.6), hT: LabelMarginal(0.5)}) == pytest.approx(0.55)
    assert ts_ub(hS, hS, S, (0.3, 0.3)) == 0


def _crossing_pair():
    # hS reads the first feature and hT the second, so their rates need not be nested
    pos = np.r_[np.ones(8), np.zeros(2)], np.r_[np.ones(9), np.zeros(1)]
    neg = np.r_[np.ones(2), np.zeros(8)], np.r_[np.ones(1), np.zeros(9)]
    X = np.c_[np.r_[pos[0], neg[0]], np.r_[pos[1], neg[1]]]
    y = np.r_[np.ones(10), -np.ones(10)]
    D = EmpiricalDataset(X, y)
    hS = ThresholdClassifier(0.5, LinearScorer((1.0, 0.0)))
    hT = ThresholdClassifier(0.5, LinearScorer((0.0, 1.0)))
    return D, hS, hT


def test_replicator_prop_bound_example():
    D, hS, hT = _crossing_pair()
    assert empirical_risk(hS, D) == pytest.approx(0.2) and empirical_risk(hT, D) == pytest.approx(0.1)
    bound = replicator_prop_bound(hS, hT, D)
    assert bound == pytest.approx(0.5 * 0.1 * 0.1 / (0.8 * 0.9))
    p = [replicator_induce(D.label_marginal(), *fitness_accuracy(h, D)).p_plus for h in (hS, hT)]
    assert abs(p[0] - p[1]) <= bound + 1e-9
    assert replicator_prop_bound(hS, hT, D, error_product=True) == pytest.approx(0.5 * 0.1 * 0.1 / (0.2 * 0.1))


def test_replicator_prop_bound_trivial_cases():
    D, hS, _ = _crossing_pair()
    assert replicator_prop_bound(hS, hS, D) == 0
    always_wrong = EmpiricalDataset(np.array([[0.0], [1.0]]), np.array([1, -1]))
    with pytest.raises(DegenerateAccuracy):
        replicator_prop_bound(ThresholdClassifier(0.5), ThresholdClassifier(0.4), always_wrong)


# --- worst case ------------------------------------------------------------


def test_worst_case_bounds():
    src = strategic_source(K)
    model = StrategicShift(StrategicConfig(0.1))
    hs = [ThresholdClassifier(t) for t in (0.4, 0.5, 0.6)]
    ds = [model.induce(src, h) for h in hs]
    probe, Dp = hs[0], ds[0]
    ub1, lb1 = worst_case_bounds(probe, Dp, hs[:1], ds[:1], src, GRID)
    assert ub1 == ub_induced_to_optimal(probe, Dp, hs[0], ds[0], GRID)
    assert lb1 == lb_tradeoff(hs[0], src, ds[0])
    ub2, lb2 = worst_case_bounds(probe, Dp, hs[:2], ds[:2], src, GRID)
    ub3, lb3 = worst_case_bounds(probe, Dp, hs, ds, src, GRID)
    assert ub1 <= ub2 <= ub3 and lb1 >= lb2 >= lb3
    brute_ub = max(ub_induced_to_optimal(probe, Dp, h, D, GRID) for h in hs for D in ds)
    brute_lb = min(lb_tradeoff(h, src, D) for h in hs for D in ds)
    assert (ub3, lb3) == (brute_ub, brute_lb)


# --- convexity condition ---------------------------------------------------

XS = np.linspace(0.01, 1.0, 100)
YS = (XS >= 0.5).astype(float)
SLOPES = (0.5, 1.0, 1.5)


def test_convexity_constant_weight(rng):
    omega = {a: (lambda x: np.ones_like(x)) for a in SLOPES}
    loss = {a: (lambda x, y, a=a: 0.5 * (a * x - y) ** 2) for a in SLOPES}
    assert convexity_condition_check(omega, loss, 10, rng, XS, YS)


def test_convexity_linear_weight_counterexample(rng):
    # h_a(x) = a x; a = 1 gives the weight 2x under a uniform source
    omega = {a: (lambda x, a=a: (1 - a) + 2 * a * x) for a in SLOPES}
    loss = {a: (lambda x, y, a=a: 0.5 * (a * x - y) ** 2) for a in SLOPES}
    assert not convexity_condition_check(omega, loss, 10, rng, XS, YS)


def test_convexity_aligned_toy(rng):
    omega = {a: (lambda x, a=a: 1 + a * x) for a in SLOPES}
    loss = {a: (lambda x, y, a=a: a * (x - y) ** 2) for a in SLOPES}
    assert convexity_condition_check(omega, loss, 3, rng, XS, YS)
