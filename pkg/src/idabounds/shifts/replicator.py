"""Replicator dynamics: class proportions rescale by their fitness under ``h``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distributions import BinnedDensity1D, BinnedJoint1D, LabelMarginal, rates
from ..errors import DegenerateFitness, InvalidConfig, UnsupportedShift
from .base import TARGET, matrix2, truncnorm_cdf

IDENTITY_REWARD = ((1.0, 0.0), (0.0, 1.0))


@dataclass(frozen=True)
class ReplicatorConfig:
    """Truncated-Gaussian class conditionals on ``[0, 1]`` plus a utility table ``U[y][y_hat]``."""

    p0: LabelMarginal = LabelMarginal(0.5)
    mu_plus: float = 0.6
    mu_minus: float = 0.4
    sigma: float = 0.15
    U: tuple = IDENTITY_REWARD

    def __post_init__(self):
        if not isinstance(self.p0, LabelMarginal):
            object.__setattr__(self, "p0", LabelMarginal(self.p0))
        if not self.sigma > 0:
            raise InvalidConfig("sigma must be positive")
        object.__setattr__(self, "U", matrix2(self.U, "utility matrix"))

    def tpr(self, theta) -> np.ndarray:
        return 1.0 - truncnorm_cdf(theta, self.mu_plus, self.sigma)

    def fpr(self, theta) -> np.ndarray:
        return 1.0 - truncnorm_cdf(theta, self.mu_minus, self.sigma)

    def class_densities(self, K: int = 512) -> tuple[BinnedDensity1D, BinnedDensity1D]:
        e = np.linspace(0.0, 1.0, K + 1)
        pos = np.diff(truncnorm_cdf(e, self.mu_plus, self.sigma))
        neg = np.diff(truncnorm_cdf(e, self.mu_minus, self.sigma))
        return BinnedDensity1D.normalized(0.0, 1.0, pos), BinnedDensity1D.normalized(0.0, 1.0, neg)

    def source(self, K: int = 512) -> BinnedJoint1D:
        pos, neg = self.class_densities(K)
        return BinnedJoint1D.from_class_conditionals(pos, neg, self.p0.p_plus)


def fitness_from_rates(tpr, fpr, U) -> tuple:
    U = matrix2(U, "utility matrix")
    f_plus = np.asarray(tpr) * U[1][1] + (1.0 - np.asarray(tpr)) * U[1][0]
    f_minus = np.asarray(fpr) * U[0][1] + (1.0 - np.asarray(fpr)) * U[0][0]
    return f_plus, f_minus


def fitness_accuracy(h, D_S) -> tuple[float, float]:
    tpr, fpr = rates(h, D_S)
    return tpr, 1.0 - fpr


def fitness_utility(h, D_S, U) -> tuple[float, float]:
    tpr, fpr = rates(h, D_S)
    f_plus, f_minus = fitness_from_rates(tpr, fpr, U)
    return float(f_plus), float(f_minus)


def replicator_update(p, f_plus, f_minus):
    """Array form of the replicator step; callers check the denominator."""
    num = p * f_plus
    return num / (num + (1.0 - p) * f_minus)


def replicator_induce(p_S: LabelMarginal, F_plus: float, F_minus: float) -> LabelMarginal:
    if F_plus < 0 or F_minus < 0:
        raise DegenerateFitness("fitness values must be nonnegative")
    p = p_S.p_plus
    den = p * F_plus + (1.0 - p) * F_minus
    if den <= 0:
        raise DegenerateFitness("mean fitness is zero")
    return LabelMarginal(min(max(p * F_plus / den, 0.0), 1.0))


@dataclass(frozen=True)
class ReplicatorShift:
    U: tuple = IDENTITY_REWARD
    shift_type: str = field(default=TARGET)

    def __post_init__(self):
        object.__setattr__(self, "U", matrix2(self.U, "utility matrix"))

    def induced_prior(self, source: BinnedJoint1D, h) -> LabelMarginal:
        f_plus, f_minus = fitness_utility(h, source, self.U)
        return replicator_induce(source.label_marginal(), f_plus, f_minus)

    def induce(self, source, h, seed: int = 0) -> BinnedJoint1D:
        if not isinstance(source, BinnedJoint1D):
            raise UnsupportedShift("the replicator model works on binned joints")
        p_h = self.induced_prior(source, h).p_plus
        return BinnedJoint1D.from_class_conditionals(
            source.class_conditional(1), source.class_conditional(-1), p_h)
