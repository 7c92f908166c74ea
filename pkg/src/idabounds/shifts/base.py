"""Shared pieces for shift models: the model protocol and truncated-normal helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from ..distributions import Distribution
from ..errors import InvalidConfig

COVARIATE = "covariate"
TARGET = "target"
NONE = "none"
OTHER = "other"


@runtime_checkable
class ShiftModel(Protocol):
    """Maps a deployed classifier to the distribution it induces.

    ``seed`` feeds a fresh generator on every call, so repeated calls with the
    same seed share their random numbers (common random numbers across ``h``).
    Closed-form models ignore it.
    """

    shift_type: str

    def induce(self, source: Distribution, h, seed: int = 0) -> Distribution: ...


@dataclass(frozen=True)
class IdentityShift:
    shift_type: str = NONE

    def induce(self, source: Distribution, h, seed: int = 0) -> Distribution:
        return source


_erf = np.frompyfunc(math.erf, 1, 1)


def normal_cdf(z):
    if np.ndim(z) == 0:
        return 0.5 * (1.0 + math.erf(float(z) / math.sqrt(2.0)))
    z = np.asarray(z, dtype=float)
    return 0.5 * (1.0 + _erf(z / math.sqrt(2.0)).astype(float))


def truncnorm_cdf(x, mu: float, sigma: float, lo: float = 0.0, hi: float = 1.0):
    """CDF of ``N(mu, sigma^2)`` truncated to ``[lo, hi]``."""
    if sigma <= 0:
        raise InvalidConfig("sigma must be positive")
    a, b = normal_cdf((lo - mu) / sigma), normal_cdf((hi - mu) / sigma)
    if b - a <= 0:
        raise InvalidConfig("truncation window carries no Gaussian mass")
    x = np.clip(np.asarray(x, dtype=float), lo, hi)
    return (normal_cdf((x - mu) / sigma) - a) / (b - a)


def truncnorm_sample(n: int, mu: float, sigma: float, rng: np.random.Generator,
                     lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Rejection sampling from the untruncated Gaussian."""
    if sigma <= 0:
        raise InvalidConfig("sigma must be positive")
    out = np.empty(0)
    while out.size < n:
        need = n - out.size
        draw = rng.normal(mu, sigma, size=max(2 * need, 16))
        out = np.concatenate((out, draw[(draw >= lo) & (draw <= hi)][:need]))
    return out


def matrix2(m, name: str) -> tuple[tuple[float, float], tuple[float, float]]:
    """Normalize a 2x2 table indexed by label (row/col 0 is -1, 1 is +1)."""
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2):
        raise InvalidConfig(f"{name} must be 2x2")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfig(f"{name} has non-finite entries")
    return (tuple(arr[0]), tuple(arr[1]))


def label_index(y) -> np.ndarray:
    return (np.asarray(y) == 1).astype(int)
