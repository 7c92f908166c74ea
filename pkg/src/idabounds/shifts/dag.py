"""Synthetic causal DAGs whose agents adapt to a deployed classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distributions import EmpiricalDataset
from ..errors import DimensionMismatch, InvalidConfig
from .base import COVARIATE, TARGET, label_index, matrix2, truncnorm_sample

# c_hy[h][y], index 0 is label -1
DEFAULT_C_HY = ((0.1, 0.6), (0.4, 0.95))


@dataclass(frozen=True)
class CovariateDagConfig:
    sigma2: float = 0.1
    sigma3: float = 0.1
    c: float = 0.1

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.sigma3 > 0):
            raise InvalidConfig("noise scales must be positive")
        if self.c < 0:
            raise InvalidConfig("adaptation strength must be nonnegative")


@dataclass(frozen=True)
class TargetDagConfig:
    alpha: float = 0.5
    mu_pos: float = 0.7
    mu_neg: float = 0.3
    sigma: float = 0.15
    sigma2: float = 0.1
    sigma3: float = 0.1
    c_hy: tuple = DEFAULT_C_HY

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig("alpha must lie in [0, 1]")
        if not (self.sigma > 0 and self.sigma2 > 0 and self.sigma3 > 0):
            raise InvalidConfig("noise scales must be positive")
        c = matrix2(self.c_hy, "c_hy")
        if not all(0.0 <= v <= 1.0 for row in c for v in row):
            raise InvalidConfig("c_hy entries must lie in [0, 1]")
        object.__setattr__(self, "c_hy", c)


def _covariate_rest(x1: np.ndarray, cfg: CovariateDagConfig, rng: np.random.Generator):
    n = x1.size
    x2 = 1.2 * x1 + rng.normal(0.0, cfg.sigma2, n)
    x3 = -x1 ** 2 + rng.normal(0.0, cfg.sigma3, n)
    y = np.where(x2 > 0, 1, -1)
    return np.column_stack((x1, x2, x3)), y


def covariate_dag_sample(n: int, cfg: CovariateDagConfig, rng: np.random.Generator) -> EmpiricalDataset:
    if n < 1:
        raise InvalidConfig("n must be positive")
    x1 = rng.uniform(-1.0, 1.0, n)
    x, y = _covariate_rest(x1, cfg, rng)
    return EmpiricalDataset(x, y, None, "source")


def covariate_dag_adapt(D: EmpiricalDataset, h, cfg: CovariateDagConfig, rng: np.random.Generator,
                        regenerate: bool = True) -> EmpiricalDataset:
    """Shift ``X1`` by ``c * (h(x) - 1)``.

    By default the descendants ``X2, X3, Y`` are redrawn from their structural
    equations so that ``P(Y | X)`` is preserved. ``regenerate=False`` keeps them.
    """
    if D.dim != 3:
        raise DimensionMismatch("covariate DAG points are three-dimensional")
    pred = h.predict_batch(D.x).astype(float)
    x1 = D.x[:, 0] + cfg.c * (pred - 1.0)
    if regenerate:
        x, y = _covariate_rest(x1, cfg, rng)
    else:
        x = np.array(D.x)
        x[:, 0] = x1
        y = D.y
    return EmpiricalDataset(x, y, D.group, "induced")


def _target_features(y: np.ndarray, cfg: TargetDagConfig, rng: np.random.Generator) -> np.ndarray:
    n = y.size
    pos = y == 1
    x1 = np.empty(n)
    x1[pos] = truncnorm_sample(int(pos.sum()), cfg.mu_pos, cfg.sigma, rng)
    x1[~pos] = truncnorm_sample(int((~pos).sum()), cfg.mu_neg, cfg.sigma, rng)
    x2 = -0.8 * x1 + rng.normal(0.0, cfg.sigma2, n)
    x3 = 0.2 * y + rng.normal(0.0, cfg.sigma3, n)
    return np.column_stack((x1, x2, x3))


def target_dag_sample(n: int, cfg: TargetDagConfig, rng: np.random.Generator) -> EmpiricalDataset:
    if n < 1:
        raise InvalidConfig("n must be positive")
    y = np.where(rng.random(n) < cfg.alpha, 1, -1)
    return EmpiricalDataset(_target_features(y, cfg, rng), y, None, "source")


def target_dag_adapt(D: EmpiricalDataset, h, cfg: TargetDagConfig, rng: np.random.Generator) -> EmpiricalDataset:
    """Relabel each agent with ``P(Y' = +1) = c_hy[h(x)][y]`` and redraw its features given ``Y'``."""
    if D.dim != 3:
        raise DimensionMismatch("target DAG points are three-dimensional")
    c = np.asarray(cfg.c_hy)
    prob = c[label_index(h.predict_batch(D.x)), label_index(D.y)]
    y_new = np.where(rng.random(D.n) < prob, 1, -1)
    return EmpiricalDataset(_target_features(y_new, cfg, rng), y_new, D.group, "induced")


@dataclass(frozen=True)
class CovariateDagShift:
    cfg: CovariateDagConfig = CovariateDagConfig()
    regenerate: bool = True
    shift_type: str = COVARIATE

    def induce(self, source, h, seed: int = 0) -> EmpiricalDataset:
        return covariate_dag_adapt(source, h, self.cfg, np.random.default_rng(seed), self.regenerate)


@dataclass(frozen=True)
class TargetDagShift:
    cfg: TargetDagConfig = TargetDagConfig()
    shift_type: str = TARGET

    def induce(self, source, h, seed: int = 0) -> EmpiricalDataset:
        return target_dag_adapt(source, h, self.cfg, np.random.default_rng(seed))
