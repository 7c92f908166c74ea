"""Strategic response to a raw-feature threshold with manipulation budget ``B``.

Agents with ``x`` in ``[tau - B, tau)`` try to cross the threshold. An attempt
succeeds with probability ``1 - (tau - x) / B`` and then lands uniformly on
``[tau, x + B]``. Everyone else keeps their feature. Starting from a uniform
feature on ``[0, 1]`` this yields the piecewise-linear weight in
:func:`strategic_weight`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..classifiers import RAW
from ..distributions import BinnedDensity1D, BinnedJoint1D, EmpiricalDataset
from ..errors import InvalidConfig, OutOfDomain
from .base import COVARIATE

DEFAULT_K = 512
LOGISTIC = "logistic"
STEP = "step"
LINEAR = "linear"


@dataclass(frozen=True)
class StrategicConfig:
    B: float

    def __post_init__(self):
        if not 0.0 <= self.B <= 0.5:
            raise InvalidConfig(f"budget B must lie in [0, 0.5], got {self.B}")


def _check_tau(tau: float, B: float) -> None:
    if B < 0:
        raise InvalidConfig("budget must be nonnegative")
    if tau - B < -1e-12 or tau + B > 1 + 1e-12:
        raise InvalidConfig(f"tau={tau} with B={B} leaves the unit interval")


def strategic_weight(x, tau: float, B: float):
    """Ratio of induced to uniform-source density at ``x``."""
    _check_tau(tau, B)
    if B <= 0:
        raise InvalidConfig("strategic_weight needs B > 0")
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)):
        raise OutOfDomain("feature must lie in [0, 1]")
    w = np.ones_like(xa)
    left = (xa >= tau - B) & (xa < tau)
    right = (xa >= tau) & (xa < tau + B)
    w = np.where(left, (tau - xa) / B, w)
    w = np.where(right, (tau + 2 * B - xa) / B, w)
    return float(w) if w.ndim == 0 else w


def _weight_antiderivative(x: np.ndarray, tau: float, B: float) -> np.ndarray:
    a = tau - B
    x = np.asarray(x, dtype=float)
    mid_lo = a + (B * B - (tau - x) ** 2) / (2 * B)
    mid_hi = a + B / 2 + (4 * B * B - (tau + 2 * B - x) ** 2) / (2 * B)
    return np.select([x < a, x < tau, x < tau + B], [x, mid_lo, mid_hi], x)


def strategic_bin_weights(tau: float, B: float, K: int = DEFAULT_K) -> np.ndarray:
    """Exact bin averages of the weight on ``K`` equal bins of ``[0, 1]``."""
    _check_tau(tau, B)
    if B <= 0:
        return np.ones(K)
    e = np.linspace(0.0, 1.0, K + 1)
    W = _weight_antiderivative(e, tau, B)
    return np.diff(W) * K


def strategic_induced_density(tau: float, B: float, K: int = DEFAULT_K) -> BinnedDensity1D:
    mass = strategic_bin_weights(tau, B, K) / K
    return BinnedDensity1D(0.0, 1.0, mass / mass.sum())


def strategic_weight_moments(tau: float, B: float) -> tuple[float, float]:
    """``(E[w], Var(w))`` under the uniform source, by exact piecewise integration."""
    _check_tau(tau, B)
    if B <= 0:
        return 1.0, 0.0
    knots = [0.0, tau - B, tau, tau + B, 1.0]
    first = second = 0.0
    for l, r in zip(knots, knots[1:]):
        if r <= l:
            continue
        # the weight is linear on each piece; evaluate just inside the endpoints
        fl = float(strategic_weight(l, tau, B))
        fr = float(_linear_limit(r, l, tau, B))
        first += (r - l) * (fl + fr) / 2
        second += (r - l) * (fl * fl + fl * fr + fr * fr) / 3
    return first, second - first * first


def _linear_limit(r: float, l: float, tau: float, B: float) -> float:
    """Left limit at ``r`` of the linear piece that starts at ``l``."""
    if l < tau - B:
        return 1.0
    if l < tau:
        return (tau - r) / B
    if l < tau + B:
        return (tau + 2 * B - r) / B
    return 1.0


def strategic_agent_response(x, tau: float, B: float, rng: np.random.Generator):
    """Draw each agent's post-response feature; works on scalars or arrays."""
    _check_tau(tau, B)
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)):
        raise OutOfDomain("feature must lie in [0, 1]")
    flat = xa.reshape(-1)
    u_try = rng.random(flat.size)
    u_land = rng.random(flat.size)
    if B <= 0:
        out = flat.copy()
    else:
        gap = tau - flat
        eligible = (flat < tau) & (flat >= tau - B)
        success = eligible & (u_try < 1.0 - gap / B)
        landed = tau + u_land * (B - gap)
        out = np.where(success, landed, flat)
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LabelConditional:
    """``P(Y = +1 | x)`` on ``[0, 1]``: logistic, step, or the identity line."""

    kind: str = LOGISTIC
    center: float = 0.5
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in (LOGISTIC, STEP, LINEAR):
            raise InvalidConfig(f"unknown conditional kind {self.kind!r}")
        if self.kind == LOGISTIC and self.scale <= 0:
            raise InvalidConfig("logistic scale must be positive")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == LOGISTIC:
            return 0.5 * (1.0 + np.tanh(0.5 * (x - self.center) / self.scale))
        if self.kind == STEP:
            return (x >= self.center).astype(float)
        return np.clip(x, 0.0, 1.0)

    def bin_average(self, edges: np.ndarray) -> np.ndarray:
        e = np.asarray(edges, dtype=float)
        lo, hi = e[:-1], e[1:]
        if self.kind == LOGISTIC:
            F = self.scale * np.logaddexp(0.0, (e - self.center) / self.scale)
        elif self.kind == STEP:
            F = np.maximum(e - self.center, 0.0)
        else:
            F = 0.5 * np.clip(e, 0.0, 1.0) ** 2
        return np.clip(np.diff(F) / (hi - lo), 0.0, 1.0)


def strategic_source(K: int = DEFAULT_K, conditional: LabelConditional = LabelConditional()) -> BinnedJoint1D:
    """Uniform feature on ``[0, 1]`` labeled by ``conditional``."""
    density = BinnedDensity1D.uniform(K)
    return BinnedJoint1D.from_conditional(density, conditional.bin_average(density.edges))


@dataclass(frozen=True)
class StrategicShift:
    cfg: StrategicConfig
    conditional: LabelConditional = LabelConditional()
    shift_type: str = COVARIATE

    def weights(self, tau: float, K: int = DEFAULT_K) -> np.ndarray:
        return strategic_bin_weights(tau, self.cfg.B, K)

    def induce(self, source, h, seed: int = 0):
        if h.mode != RAW:
            raise InvalidConfig("strategic response thresholds the raw feature")
        if isinstance(source, BinnedJoint1D):
            if source.lo != 0.0 or source.hi != 1.0:
                raise InvalidConfig("strategic source must live on [0, 1]")
            m = source.mass_pos + source.mass_neg
            if np.max(np.abs(m - 1.0 / source.K)) > 1e-12:
                raise InvalidConfig("strategic response assumes a uniform source feature")
            w = self.weights(h.tau, source.K)
            # covariate shift: rescale each bin, keeping its label split
            return BinnedJoint1D(0.0, 1.0, source.mass_pos * w, source.mass_neg * w)
        rng = np.random.default_rng(seed)
        x_new = strategic_agent_response(source.x[:, 0], h.tau, self.cfg.B, rng)
        moved = x_new != source.x[:, 0]
        fresh = np.where(rng.random(source.n) < self.conditional(x_new), 1, -1)
        y = np.where(moved, fresh, source.y)
        x = np.array(source.x)
        x[:, 0] = x_new
        return EmpiricalDataset(x, y, source.group, "induced")
