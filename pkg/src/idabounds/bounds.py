"""Transferability bounds between a source distribution and classifier-induced distributions.

Every function takes already-induced distributions; pairing a classifier with
the distribution it induces is the caller's job (see :mod:`idabounds.harness`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .distributions import (BinnedJoint1D, Distribution, LabelMarginal, empirical_risk, feature_tv, grid_profile,
                            h_divergence, importance_weights, prediction_marginal, rates, tv_binary)
from .errors import AssumptionsUnmet, DegenerateAccuracy, InvalidConfig, MissingConditional

TOL = 1e-9
COV_EPS = 1e-12


@dataclass(frozen=True)
class CombinedErrors:
    lambda_min: float
    lambda_max_of_h: float


@dataclass(frozen=True)
class BoundReport:
    """Gap, worst-pair error and bound values for one experiment step."""

    diff: float
    max_pair: float
    ub: float
    lb: float
    ub_source: float = math.nan
    ub_optimal: float = math.nan
    lb_tradeoff: float = math.nan
    lb_features: float = math.nan
    components: Mapping[str, float | str] = field(default_factory=dict)

    def violations(self, tol: float = TOL) -> list[str]:
        out = []
        if self.diff < -tol:
            out.append(f"diff {self.diff!r} is negative")
        if self.diff > self.ub + tol:
            out.append(f"diff {self.diff!r} exceeds ub {self.ub!r}")
        if self.lb > self.max_pair + tol:
            out.append(f"lb {self.lb!r} exceeds max {self.max_pair!r}")
        return out

    def row(self) -> dict[str, float | str]:
        base = {"diff": self.diff, "max": self.max_pair, "ub": self.ub, "lb": self.lb,
                "ub_source": self.ub_source, "ub_optimal": self.ub_optimal,
                "lb_tradeoff": self.lb_tradeoff, "lb_features": self.lb_features}
        base.update(self.components)
        return base


def combined_errors(h, D: Distribution, D2: Distribution, grid) -> CombinedErrors:
    lam = float(np.min(grid_profile(D, grid).errors + grid_profile(D2, grid).errors))
    return CombinedErrors(lam, empirical_risk(h, D) + empirical_risk(h, D2))


def ub_source_to_induced(h, D_S: Distribution, D_h: Distribution, grid) -> float:
    lam = combined_errors(h, D_S, D_h, grid).lambda_min
    return empirical_risk(h, D_S) + lam + 0.5 * h_divergence(D_S, D_h, grid)


def ub_induced_to_optimal(h, D_h: Distribution, h_T, D_hT: Distribution, grid) -> float:
    del h_T  # the bound depends on h_T only through the distribution it induces
    ce = combined_errors(h, D_h, D_hT, grid)
    return 0.5 * (ce.lambda_min + ce.lambda_max_of_h) + 0.5 * h_divergence(D_hT, D_h, grid)


def lb_tradeoff(h, D_S: Distribution, D_h: Distribution) -> float:
    tv_y = tv_binary(D_S.label_marginal(), D_h.label_marginal())
    tv_h = tv_binary(prediction_marginal(h, D_S), prediction_marginal(h, D_h))
    return 0.5 * (tv_y - tv_h)


def lb_tradeoff_features(h, D_S: Distribution, D_h: Distribution, grid=None) -> float:
    """Lower bound with the feature-marginal TV in place of the prediction TV.

    Sampled distributions need ``grid``: the feature TV is then taken over the
    cells cut by the grid thresholds, which refines ``h`` when ``h`` is on the grid.
    """
    tv_y = tv_binary(D_S.label_marginal(), D_h.label_marginal())
    return 0.5 * (tv_y - feature_tv(D_S, D_h, grid))


def cs_ub_suboptimality(hS, hT, D_S: Distribution, omega_S, omega_T) -> float:
    del hS
    return math.sqrt(empirical_risk(hT, D_S)) * (omega_S.sd() + omega_T.sd())


def _cs_terms(h, D_S, omega):
    if not isinstance(D_S, BinnedJoint1D):
        raise MissingConditional("assumption checks need per-bin P(Y=+1|x)")
    if omega.K != D_S.K:
        raise InvalidConfig("weight map is not aligned with the source bins")
    mass = D_S.mass_pos + D_S.mass_neg
    eta = D_S.conditional
    e = D_S.edges
    accept = h.accept_fraction(e[:-1], e[1:])
    return mass, eta, accept, omega.omega


def cs_assumption_check(h, D_S, omega) -> tuple[bool, bool, bool]:
    """Check the three covariate-shift lower-bound assumptions on a binned source.

    The conditional expectations are taken as unnormalized source integrals over
    ``X+ = {omega >= 1}`` and ``X- = {omega < 1}``.
    """
    mass, eta, accept, w = _cs_terms(h, D_S, omega)
    plus = w >= 1.0
    one_minus = 1.0 - w

    def split(g):
        return abs(np.sum((mass * g * one_minus)[plus])), abs(np.sum((mass * g * one_minus)[~plus]))

    p1, m1 = split(eta)
    p2, m2 = split(accept)
    return bool(p1 >= m1), bool(p2 >= m2), cs_covariance(h, D_S, omega) > COV_EPS


def cs_covariance(h, D_S, omega) -> float:
    """``Cov(P(Y=+1|x) - P(h=+1|x), omega_x)`` under the source."""
    mass, eta, accept, w = _cs_terms(h, D_S, omega)
    g = eta - accept
    return float(np.sum(mass * g * w) - np.sum(mass * g) * np.sum(mass * w))


def cs_lb_positive(h, D_S: BinnedJoint1D, D_h: BinnedJoint1D) -> float:
    omega = importance_weights(D_S.marginal, D_h.marginal)
    if not all(cs_assumption_check(h, D_S, omega)):
        raise AssumptionsUnmet("covariate-shift lower-bound assumptions do not hold")
    return lb_tradeoff(h, D_S, D_h)


def strategic_ub(B: float, err_source_of_hT: float) -> float:
    if B < 0 or not 0.0 <= err_source_of_hT <= 1.0:
        raise InvalidConfig("need B >= 0 and an error in [0, 1]")
    return math.sqrt(2.0 * B / 3.0 * err_source_of_hT)


def _as_prior(p) -> float:
    return p.p_plus if isinstance(p, LabelMarginal) else float(p)


def ts_ub(hS, hT, D_S: Distribution, p_of) -> float:
    """Target-shift gap bound; ``p_of`` gives the induced priors ``(p(hS), p(hT))``."""
    if isinstance(p_of, Mapping):
        p_hs, p_ht = _as_prior(p_of[hS]), _as_prior(p_of[hT])
    else:
        p_hs, p_ht = (_as_prior(v) for v in p_of)
    tpr_s, fpr_s = rates(hS, D_S)
    tpr_t, fpr_t = rates(hT, D_S)
    p = D_S.label_marginal().p_plus
    return abs(p_hs - p_ht) + (1.0 + p) * (abs(tpr_s - tpr_t) + abs(fpr_s - fpr_t))


def ts_lb(p: float, p_h: float, TPR_S: float, FPR_S: float) -> float:
    for v in (p, p_h, TPR_S, FPR_S):
        if not 0.0 <= v <= 1.0:
            raise InvalidConfig("target-shift lower bound inputs must lie in [0, 1]")
    return abs(p - p_h) * (1.0 - abs(TPR_S - FPR_S)) / 2.0


def replicator_prop_bound(hS, hT, D_S: Distribution, error_product: bool = False) -> float:
    """Bound on ``|p(hS) - p(hT)|`` under accuracy-fitness replicator dynamics.

    The denominator is the product of accuracies; ``error_product=True`` swaps
    in the product of errors for comparison.
    """
    e_s, e_t = empirical_risk(hS, D_S), empirical_risk(hT, D_S)
    if e_s >= 1.0 or e_t >= 1.0:
        raise DegenerateAccuracy("a classifier has zero accuracy on the source")
    tpr_s, _ = rates(hS, D_S)
    tpr_t, _ = rates(hT, D_S)
    den = e_s * e_t if error_product else (1.0 - e_s) * (1.0 - e_t)
    if den <= 0:
        raise DegenerateAccuracy("denominator vanishes")
    p = D_S.label_marginal().p_plus
    return p * abs(e_s - e_t) * abs(tpr_s - tpr_t) / den


def worst_case_bounds(probe_h, probe_induced: Distribution, candidate_classifiers: Iterable,
                      candidate_distributions: Iterable[Distribution], source: Distribution,
                      grid) -> tuple[float, float]:
    """Worst case of the gap bounds over a predicted set of (classifier, distribution) pairs."""
    hs = list(candidate_classifiers)
    ds = list(candidate_distributions)
    if not hs or not ds:
        raise InvalidConfig("candidate sets must be nonempty")
    ub = max(ub_induced_to_optimal(probe_h, probe_induced, h, D, grid) for h, D in itertools.product(hs, ds))
    lb = min(lb_tradeoff(h, source, D) for h, D in itertools.product(hs, ds))
    return ub, lb


def convexity_condition_check(omega_of: Mapping, loss_of: Mapping, sample_pairs: int,
                              rng: np.random.Generator, xs: Sequence, ys: Sequence) -> bool:
    """Sampled check of ``(omega(h) - omega(h')) (loss(h) - loss(h')) >= 0``.

    ``omega_of[h]`` maps features to weights and ``loss_of[h]`` maps
    ``(x, y)`` to losses. When ``sample_pairs`` covers every pair, all pairs are
    enumerated; otherwise pairs are drawn with ``rng``.
    """
    keys = list(omega_of)
    if len(keys) < 2:
        raise InvalidConfig("need at least two classifiers")
    pairs = list(itertools.combinations(range(len(keys)), 2))
    if sample_pairs < len(pairs):
        pairs = [tuple(rng.choice(len(keys), size=2, replace=False)) for _ in range(sample_pairs)]
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    for i, j in pairs:
        a, b = keys[i], keys[j]
        prod = (omega_of[a](xs) - omega_of[b](xs)) * (loss_of[a](xs, ys) - loss_of[b](xs, ys))
        if np.any(prod < -COV_EPS):
            return False
    return True
