"""Threshold classifiers ``h_tau`` over a linear scorer or the raw first coordinate."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, MissingClass, NonFinite, ParseError

if TYPE_CHECKING:
    from .distributions import EmpiricalDataset

RAW = "raw"
SQUASHED = "squashed"
DEFAULT_GRID_SIZE = 201


def sigmoid(z):
    # tanh form keeps sigmoid(0) == 0.5 exactly and never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class LinearScorer:
    w: tuple[float, ...]
    b: float = 0.0

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        if not all(np.isfinite(w)) or not np.isfinite(self.b):
            raise NonFinite(f"scorer has non-finite entries: w={w}, b={self.b}")

    @property
    def dim(self) -> int:
        return len(self.w)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    def logit(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"scorer expects dimension {self.dim}, got {x.shape[-1]}")
        return x @ self.weights + self.b

    def to_text(self) -> str:
        return " ".join(f"{v:.17g}" for v in (*self.w, self.b))

    @classmethod
    def from_text(cls, text: str) -> "LinearScorer":
        try:
            vals = [float(tok) for tok in text.split()]
        except ValueError as exc:
            raise ParseError(f"bad scorer record: {text!r}") from exc
        if len(vals) < 2:
            raise ParseError("scorer record needs at least one weight and a bias")
        return cls(tuple(vals[:-1]), vals[-1])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LinearScorer":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Identity1D:
    """Scores a point by its first coordinate."""

    def logit(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., 0]


IDENTITY = Identity1D()


@dataclass(frozen=True)
class ThresholdClassifier:
    """``h(x) = +1`` iff ``sigmoid(w.x + b) > tau`` (squashed) or ``x_1 >= tau`` (raw)."""

    tau: float
    scorer: LinearScorer | Identity1D = IDENTITY
    mode: str = RAW

    def __post_init__(self):
        object.__setattr__(self, "tau", float(self.tau))
        if self.mode not in (RAW, SQUASHED):
            raise InvalidConfig(f"unknown mode {self.mode!r}")
        if self.mode == SQUASHED:
            if not 0.0 <= self.tau <= 1.0:
                raise InvalidConfig(f"squashed threshold must lie in [0, 1], got {self.tau}")
            if not isinstance(self.scorer, LinearScorer):
                raise InvalidConfig("squashed mode needs a LinearScorer")

    def score(self, X: np.ndarray) -> np.ndarray:
        z = self.scorer.logit(X)
        return sigmoid(z) if self.mode == SQUASHED else z

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        s = self.score(np.atleast_2d(X))
        if self.mode == SQUASHED:
            accept = s > self.tau
        else:
            accept = s >= self.tau
        return np.where(accept, 1, -1).astype(np.int8)

    def accept_fraction(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Fraction of each bin ``[lo, hi)`` accepted, assuming uniform mass inside the bin."""
        if self.mode != RAW:
            raise InvalidConfig("bin acceptance is only defined for raw-mode classifiers")
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return np.clip((hi - self.tau) / (hi - lo), 0.0, 1.0)


def predict(h: ThresholdClassifier, x) -> int:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    if isinstance(h.scorer, LinearScorer) and x.shape[0] != h.scorer.dim:
        raise DimensionMismatch(f"expected dimension {h.scorer.dim}, got {x.shape[0]}")
    return int(h.predict_batch(x[None, :])[0])


@dataclass(frozen=True)
class HypothesisGrid:
    taus: tuple[float, ...]
    scorer: LinearScorer | Identity1D = IDENTITY
    mode: str = RAW
    _classifiers: tuple[ThresholdClassifier, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if not taus:
            raise InvalidConfig("hypothesis grid must be nonempty")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise InvalidConfig("grid thresholds must be strictly increasing")
        object.__setattr__(self, "taus", taus)
        hs = tuple(ThresholdClassifier(t, self.scorer, self.mode) for t in taus)
        object.__setattr__(self, "_classifiers", hs)

    @classmethod
    def uniform(cls, size: int = DEFAULT_GRID_SIZE, scorer=IDENTITY, mode: str = RAW,
                lo: float = 0.0, hi: float = 1.0) -> "HypothesisGrid":
        if size == 1:
            return cls((lo,), scorer, mode)
        return cls(tuple(np.linspace(lo, hi, size)), scorer, mode)

    def restrict(self, lo: float, hi: float) -> "HypothesisGrid":
        """Sub-grid of thresholds inside ``[lo, hi]`` (small slack for float edges)."""
        keep = tuple(t for t in self.taus if lo - 1e-12 <= t <= hi + 1e-12)
        return HypothesisGrid(keep, self.scorer, self.mode)

    @property
    def tau_array(self) -> np.ndarray:
        return np.asarray(self.taus)

    def __len__(self) -> int:
        return len(self.taus)

    def __iter__(self) -> Iterator[ThresholdClassifier]:
        return iter(self._classifiers)

    def __getitem__(self, i: int) -> ThresholdClassifier:
        return self._classifiers[i]

    def index_of(self, h: ThresholdClassifier) -> int:
        return self.taus.index(h.tau)


def argmin_smallest(values: Sequence[float] | np.ndarray) -> int:
    """Index of the minimum; ties resolve to the first (smallest-tau) entry."""
    return int(np.argmin(np.asarray(values, dtype=float)))


def train_base_scorer(D: "EmpiricalDataset", epochs: int = 500, lr: float = 0.5,
                      seed: int = 0) -> LinearScorer:
    """Full-batch gradient descent on the mean logistic loss from zero initialization.

    ``seed`` is accepted for interface symmetry with the sampling routines; the
    procedure itself draws no random numbers.
    """
    del seed
    X = np.asarray(D.x, dtype=float)
    y = np.asarray(D.y, dtype=float)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise MissingClass("logistic training needs both classes present")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(int(epochs)):
        margin = y * (X @ w + b)
        # d/dz log(1 + e^{-z}) = -sigmoid(-z)
        coef = -y * sigmoid(-margin)
        w = w - lr * (X.T @ coef) / n
        b = b - lr * float(coef.mean())
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise NonFinite("logistic training diverged")
    loss = float(np.mean(np.logaddexp(0.0, -y * (X @ w + b))))
    if not np.isfinite(loss):
        raise NonFinite("logistic loss is not finite")
    return LinearScorer(tuple(w), b)
