"""Searches for source- and induced-optimal classifiers and the induced-risk optimizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifiers import HypothesisGrid, ThresholdClassifier, argmin_smallest
from .distributions import Distribution, empirical_risk, grid_profile
from .errors import DegenerateAccuracy, DegenerateFitness, InvalidAlpha, InvalidConfig, MissingClass, NonFinite
from .shifts.replicator import ReplicatorConfig, fitness_from_rates, replicator_update

FD_STEP = 1e-5


def source_optimal(grid: HypothesisGrid, D_S: Distribution) -> ThresholdClassifier:
    return grid[argmin_smallest(grid_profile(D_S, grid).errors)]


def induced_risks(grid: HypothesisGrid, D_S: Distribution, model, seed: int = 0) -> np.ndarray:
    """``err_{D(h)}(h)`` for every grid classifier, all induced with the same seed."""
    return np.array([empirical_risk(h, model.induce(D_S, h, seed)) for h in grid])


def induced_optimal(grid: HypothesisGrid, D_S: Distribution, model, seed: int = 0) -> ThresholdClassifier:
    return grid[argmin_smallest(induced_risks(grid, D_S, model, seed))]


# ---------------------------------------------------------------------------
# replicator dynamics with truncated-Gaussian classes


def replicator_induced_prior(theta, cfg: ReplicatorConfig):
    tpr, fpr = cfg.tpr(theta), cfg.fpr(theta)
    f_plus, f_minus = fitness_from_rates(tpr, fpr, cfg.U)
    p = cfg.p0.p_plus
    if np.any(p * f_plus + (1 - p) * f_minus <= 0):
        raise DegenerateFitness("mean fitness is zero")
    return replicator_update(p, f_plus, f_minus)


def replicator_closed_form_risk(theta, cfg: ReplicatorConfig):
    """Induced 0-1 risk of ``x >= theta`` under one replicator step."""
    p_h = replicator_induced_prior(theta, cfg)
    risk = 1.0 - (p_h * cfg.tpr(theta) + (1.0 - p_h) * (1.0 - cfg.fpr(theta)))
    return float(risk) if np.ndim(risk) == 0 else risk


def replicator_source_risk(theta, cfg: ReplicatorConfig):
    p = cfg.p0.p_plus
    risk = p * (1.0 - cfg.tpr(theta)) + (1.0 - p) * cfg.fpr(theta)
    return float(risk) if np.ndim(risk) == 0 else risk


def fd_gradient(f: Callable[[float], float], theta: float, step: float = FD_STEP) -> float:
    return (f(theta + step) - f(theta - step)) / (2.0 * step)


def replicator_gd(cfg: ReplicatorConfig, lr: float = 0.05, iters: int = 500, theta0: float = 0.5,
                  backtracking: bool = True, max_halvings: int = 40) -> float:
    """Projected gradient descent on the closed-form induced risk over ``[0, 1]``."""
    if lr <= 0:
        raise InvalidConfig("learning rate must be positive")
    theta = float(np.clip(theta0, 0.0, 1.0))
    risk = replicator_closed_form_risk(theta, cfg)
    for _ in range(int(iters)):
        g = fd_gradient(lambda t: replicator_closed_form_risk(t, cfg), theta)
        if not np.isfinite(g):
            raise NonFinite("gradient is not finite")
        step = lr
        accepted = False
        for _ in range(max_halvings if backtracking else 1):
            cand = float(np.clip(theta - step * g, 0.0, 1.0))
            cand_risk = replicator_closed_form_risk(cand, cfg)
            if not backtracking or cand_risk <= risk:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no decrease found along the gradient
        theta, risk = cand, cand_risk
    return theta


# ---------------------------------------------------------------------------
# one-point bandit gradient descent


@dataclass(frozen=True)
class BanditConfig:
    dim: int
    delta: float = 0.1
    eta: float = 0.01
    T: int = 2000
    theta_radius: float = 2.0
    n_t: int = 64

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidConfig("dim must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InvalidConfig("delta must lie in (0, 1)")
        if self.eta < 0:
            raise InvalidConfig("eta must be nonnegative")
        if self.T < 1 or self.n_t < 1:
            raise InvalidConfig("T and n_t must be positive")
        if self.theta_radius <= 0:
            raise InvalidConfig("theta_radius must be positive")


@dataclass(frozen=True)
class PerformativeProblem:
    """``loss(theta, samples) -> per-sample losses``; ``sampler(theta, n, rng) -> samples``."""

    loss: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, int, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class BanditTrace:
    theta: np.ndarray
    rounds: np.ndarray
    ir: np.ndarray
    theta_norm: np.ndarray


def project_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(theta))
    return theta if norm <= radius else theta * (radius / norm)


def bandit_gd_trace(problem: PerformativeProblem, cfg: BanditConfig, rng: np.random.Generator) -> BanditTrace:
    d = cfg.dim
    theta = np.zeros(d)
    radius = (1.0 - cfg.delta) * cfg.theta_radius
    irs = np.empty(cfg.T)
    norms = np.empty(cfg.T)
    for t in range(cfg.T):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        probe = theta + cfg.delta * u
        z = problem.sampler(probe, cfg.n_t, rng)
        ir = float(np.mean(problem.loss(probe, z)))
        if not np.isfinite(ir):
            raise NonFinite(f"loss estimate is not finite at round {t + 1}")
        g = (d / cfg.delta) * ir * u
        theta = project_ball(theta - cfg.eta * g, radius)
        irs[t] = ir
        norms[t] = np.linalg.norm(theta)
    return BanditTrace(theta, np.arange(1, cfg.T + 1), irs, norms)


def bandit_gd(problem: PerformativeProblem, cfg: BanditConfig, rng: np.random.Generator) -> np.ndarray:
    return bandit_gd_trace(problem, cfg, rng).theta


@dataclass(frozen=True)
class QuadraticToy:
    """Location-shift toy: ``z ~ N(mu0 + eps * theta, s^2 I)`` with loss ``|theta - z|^2``.

    Induced risk is ``|(1 - eps) theta - mu0|^2 + d s^2``, minimized at
    ``theta* = mu0 / (1 - eps)`` with value ``d s^2``.
    """

    mu0: tuple[float, ...] = (0.3, -0.2)
    eps: float = 0.5
    s: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise InvalidConfig("eps must lie in [0, 1)")

    @property
    def dim(self) -> int:
        return len(self.mu0)

    def problem(self) -> PerformativeProblem:
        mu0 = np.asarray(self.mu0, dtype=float)

        def sampler(theta, n, rng):
            return mu0 + self.eps * theta + self.s * rng.standard_normal((n, mu0.size))

        def loss(theta, z):
            return np.sum((theta - z) ** 2, axis=-1)

        return PerformativeProblem(loss, sampler)

    def induced_risk(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(((1 - self.eps) * theta - np.asarray(self.mu0)) ** 2) + self.dim * self.s ** 2)

    @property
    def minimizer(self) -> np.ndarray:
        return np.asarray(self.mu0) / (1 - self.eps)

    @property
    def min_risk(self) -> float:
        return self.dim * self.s ** 2


# ---------------------------------------------------------------------------
# regularized training and the improvement metric


def regularized_objective(D_S: Distribution, grid: HypothesisGrid, alpha: float) -> np.ndarray:
    """Source error plus ``alpha`` times the positive rate under a uniform label prior."""
    if alpha < 0:
        raise InvalidAlpha("alpha must be nonnegative")
    prof = grid_profile(D_S, grid)
    p = prof.p_plus
    if p <= 0 or p >= 1:
        raise MissingClass("both classes must be present")
    if p - 0.5 * alpha < 0:
        # the penalty rewrites as (p - a/2) err+ + (1 - p + a/2) err- + a/2
        raise InvalidAlpha(f"alpha={alpha} makes the positive-class weight negative (p={p})")
    return prof.errors + alpha * 0.5 * (prof.tpr + prof.fpr)


def regularized_training(D_S: Distribution, grid: HypothesisGrid, alpha: float) -> ThresholdClassifier:
    if alpha == 0:
        return source_optimal(grid, D_S)
    return grid[argmin_smallest(regularized_objective(D_S, grid, alpha))]


def improvement_from_risks(risk_S: float, risk_T: float) -> float:
    acc_S = 1.0 - risk_S
    if acc_S <= 0:
        raise DegenerateAccuracy("source-optimal classifier has zero induced accuracy")
    return ((1.0 - risk_T) - acc_S) / acc_S


def improvement_metric(hS, hT, model, D_S: Distribution, seed: int = 0) -> float:
    r_S = empirical_risk(hS, model.induce(D_S, hS, seed))
    r_T = empirical_risk(hT, model.induce(D_S, hT, seed))
    return improvement_from_risks(r_S, r_T)
