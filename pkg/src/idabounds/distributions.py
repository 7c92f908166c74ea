"""Datasets, binned densities, risks and divergences.

Two representations of a labeled distribution are supported and every risk or
divergence below accepts either:

* :class:`EmpiricalDataset`, a finite sample treated as its empirical measure;
* :class:`BinnedJoint1D`, a piecewise-constant density on ``[lo, hi]`` with a
  per-bin split into positive and negative mass.

Within a bin the binned representation is uniform, so a raw threshold that
falls inside a bin accepts the matching fraction of that bin. All quantities
computed this way are exact for the piecewise-constant distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Union

import numpy as np

from .errors import InvalidConfig, MismatchedBins, MissingClass, OutOfDomain, UnsupportedShift

if TYPE_CHECKING:
    from .classifiers import HypothesisGrid, ThresholdClassifier

MASS_TOL = 1e-9
WEIGHT_MEAN_TOL = 1e-6
# induced mass below this on an empty source bin is treated as round-off
SUPPORT_EPS = 1e-15


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledPoint:
    x: tuple[float, ...]
    y: int
    group: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        if self.y not in (-1, 1):
            raise InvalidConfig(f"label must be -1 or +1, got {self.y}")
        if len(self.x) < 1:
            raise InvalidConfig("feature vector must have dimension >= 1")


@dataclass(frozen=True, eq=False)
class EmpiricalDataset:
    """A labeled sample stored column-wise (``x`` is ``n x d``, ``y`` in {-1, +1})."""

    x: np.ndarray
    y: np.ndarray
    group: np.ndarray | None = None
    domain_tag: str = "source"

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.y).astype(np.int8)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise InvalidConfig("dataset must be a nonempty n x d array")
        if y.shape != (x.shape[0],):
            raise InvalidConfig("label vector length does not match features")
        if not np.all((y == 1) | (y == -1)):
            raise InvalidConfig("labels must be -1 or +1")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.group is not None:
            object.__setattr__(self, "group", _frozen(self.group, dtype=np.int64))

    @classmethod
    def from_points(cls, points: Iterable[LabeledPoint], domain_tag: str = "source") -> "EmpiricalDataset":
        pts = list(points)
        if not pts:
            raise InvalidConfig("dataset must be nonempty")
        dims = {len(p.x) for p in pts}
        if len(dims) != 1:
            raise InvalidConfig("points have mixed dimensions")
        groups = None
        if all(p.group is not None for p in pts):
            groups = [p.group for p in pts]
        return cls(np.array([p.x for p in pts]), np.array([p.y for p in pts]), groups, domain_tag)

    @property
    def points(self) -> list[LabeledPoint]:
        g = self.group
        return [LabeledPoint(tuple(self.x[i]), int(self.y[i]), None if g is None else int(g[i]))
                for i in range(self.n)]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def p_plus(self) -> float:
        return float(np.mean(self.y == 1))

    def label_marginal(self) -> "LabelMarginal":
        return LabelMarginal(self.p_plus)

    def tagged(self, domain_tag: str) -> "EmpiricalDataset":
        return EmpiricalDataset(self.x, self.y, self.group, domain_tag)


@dataclass(frozen=True)
class LabelMarginal:
    p_plus: float

    def __post_init__(self):
        p = float(self.p_plus)
        if not 0.0 <= p <= 1.0:
            raise InvalidConfig(f"p_plus must lie in [0, 1], got {p}")
        object.__setattr__(self, "p_plus", p)


@dataclass(frozen=True, eq=False)
class BinnedDensity1D:
    """Equal-width histogram density on ``[lo, hi]``; ``mass`` holds per-bin probabilities."""

    lo: float
    hi: float
    mass: np.ndarray

    def __post_init__(self):
        m = _frozen(self.mass)
        if not self.hi > self.lo:
            raise InvalidConfig("need hi > lo")
        if m.ndim != 1 or m.size < 2:
            raise InvalidConfig("need at least two bins")
        if np.any(m < 0):
            raise InvalidConfig("bin masses must be nonnegative")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise InvalidConfig(f"bin masses sum to {m.sum()!r}, expected 1")
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @classmethod
    def uniform(cls, K: int = 512, lo: float = 0.0, hi: float = 1.0) -> "BinnedDensity1D":
        return cls(lo, hi, np.full(K, 1.0 / K))

    @classmethod
    def normalized(cls, lo, hi, weights) -> "BinnedDensity1D":
        w = np.asarray(weights, dtype=float)
        return cls(lo, hi, w / w.sum())

    @property
    def K(self) -> int:
        return self.mass.size

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.K + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def same_bins(self, other) -> bool:
        return self.lo == other.lo and self.hi == other.hi and self.K == other.K

    def bin_index(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any((x < self.lo) | (x > self.hi)):
            raise OutOfDomain("value outside the binned range")
        idx = np.floor((x - self.lo) / (self.hi - self.lo) * self.K).astype(int)
        return np.minimum(idx, self.K - 1)


@dataclass(frozen=True, eq=False)
class BinnedJoint1D:
    """Joint law of (X, Y) with X binned: ``mass_pos[k] = P(X in bin k, Y = +1)``."""

    lo: float
    hi: float
    mass_pos: np.ndarray
    mass_neg: np.ndarray

    def __post_init__(self):
        mp, mn = _frozen(self.mass_pos), _frozen(self.mass_neg)
        if mp.shape != mn.shape or mp.ndim != 1 or mp.size < 2:
            raise InvalidConfig("positive and negative masses must be aligned 1-D arrays")
        if np.any(mp < 0) or np.any(mn < 0):
            raise InvalidConfig("masses must be nonnegative")
        total = mp.sum() + mn.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidConfig(f"joint masses sum to {total!r}, expected 1")
        if not self.hi > self.lo:
            raise InvalidConfig("need hi > lo")
        object.__setattr__(self, "mass_pos", mp)
        object.__setattr__(self, "mass_neg", mn)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @classmethod
    def from_conditional(cls, density: BinnedDensity1D, eta) -> "BinnedJoint1D":
        """Combine a feature density with per-bin ``P(Y=+1 | bin)``."""
        eta = np.asarray(eta, dtype=float)
        if eta.shape != density.mass.shape:
            raise MismatchedBins("conditional does not match the density bins")
        if np.any((eta < 0) | (eta > 1)):
            raise InvalidConfig("conditional probabilities must lie in [0, 1]")
        return cls(density.lo, density.hi, density.mass * eta, density.mass * (1.0 - eta))

    @classmethod
    def from_class_conditionals(cls, pos: BinnedDensity1D, neg: BinnedDensity1D, p_plus: float) -> "BinnedJoint1D":
        if not pos.same_bins(neg):
            raise MismatchedBins("class-conditional densities use different bins")
        p = LabelMarginal(p_plus).p_plus
        return cls(pos.lo, pos.hi, p * pos.mass, (1.0 - p) * neg.mass)

    @property
    def K(self) -> int:
        return self.mass_pos.size

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.K + 1)

    @property
    def marginal(self) -> BinnedDensity1D:
        m = self.mass_pos + self.mass_neg
        return BinnedDensity1D(self.lo, self.hi, m / m.sum())

    @property
    def conditional(self) -> np.ndarray:
        m = self.mass_pos + self.mass_neg
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(m > 0, self.mass_pos / np.where(m > 0, m, 1.0), 0.0)

    @property
    def p_plus(self) -> float:
        return float(self.mass_pos.sum())

    def label_marginal(self) -> LabelMarginal:
        return LabelMarginal(min(max(self.p_plus, 0.0), 1.0))

    def class_conditional(self, label: int) -> BinnedDensity1D:
        m = self.mass_pos if label == 1 else self.mass_neg
        if m.sum() <= 0:
            raise MissingClass(f"class {label:+d} has no mass")
        return BinnedDensity1D(self.lo, self.hi, m / m.sum())

    def sample(self, n: int, rng: np.random.Generator, domain_tag: str = "source") -> EmpiricalDataset:
        """Draw ``n`` labeled points; features are uniform inside their bin."""
        m = self.mass_pos + self.mass_neg
        k = rng.choice(self.K, size=n, p=m / m.sum())
        width = (self.hi - self.lo) / self.K
        x = self.lo + (k + rng.random(n)) * width
        y = np.where(rng.random(n) < self.conditional[k], 1, -1)
        return EmpiricalDataset(x[:, None], y, None, domain_tag)


Distribution = Union[EmpiricalDataset, BinnedJoint1D]


@dataclass(frozen=True, eq=False)
class ImportanceWeightMap:
    """Per-bin ratio of induced to source mass, aligned with the source bins."""

    lo: float
    hi: float
    omega: np.ndarray
    source_mass: np.ndarray

    def __post_init__(self):
        om, sm = _frozen(self.omega), _frozen(self.source_mass)
        if om.shape != sm.shape:
            raise MismatchedBins("weights and source masses are not aligned")
        if np.any(om < 0):
            raise InvalidConfig("importance weights must be nonnegative")
        mean = float(np.sum(om * sm))
        if abs(mean - 1.0) > WEIGHT_MEAN_TOL:
            raise InvalidConfig(f"importance weights have source mean {mean!r}, expected 1")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "source_mass", sm)

    @classmethod
    def constant_one(cls, source: BinnedDensity1D) -> "ImportanceWeightMap":
        return cls(source.lo, source.hi, np.ones(source.K), source.mass)

    @property
    def K(self) -> int:
        return self.omega.size

    def mean(self) -> float:
        return float(np.sum(self.omega * self.source_mass))

    def variance(self) -> float:
        """``Var(omega_X)`` for ``X`` drawn from the source."""
        m = self.mean()
        return float(np.sum(self.source_mass * (self.omega - m) ** 2))

    def sd(self) -> float:
        return float(np.sqrt(self.variance()))

    def at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any((x < self.lo) | (x > self.hi)):
            raise MismatchedBins("point lies outside the weight map's bins")
        idx = np.minimum(np.floor((x - self.lo) / (self.hi - self.lo) * self.K).astype(int), self.K - 1)
        return self.omega[idx]


# ---------------------------------------------------------------------------
# total variation


def tv_binary(p: LabelMarginal, q: LabelMarginal) -> float:
    return abs(p.p_plus - q.p_plus)


def tv_binned(f: BinnedDensity1D, g: BinnedDensity1D) -> float:
    if not f.same_bins(g):
        raise MismatchedBins("densities have different bin edges")
    return float(0.5 * np.sum(np.abs(f.mass - g.mass)))


# ---------------------------------------------------------------------------
# per-classifier risks


def _require_both_classes(D: Distribution) -> None:
    if isinstance(D, EmpiricalDataset):
        ok = np.any(D.y == 1) and np.any(D.y == -1)
    else:
        ok = D.mass_pos.sum() > 0 and D.mass_neg.sum() > 0
    if not ok:
        raise MissingClass("both classes must be present")


def _accept_pos_neg(h: "ThresholdClassifier", D: Distribution) -> tuple[float, float]:
    """``(P(h=+1, Y=+1), P(h=+1, Y=-1))`` under ``D``."""
    if isinstance(D, EmpiricalDataset):
        pred = h.predict_batch(D.x) == 1
        pos = D.y == 1
        return float(np.mean(pred & pos)), float(np.mean(pred & ~pos))
    e = D.edges
    f = h.accept_fraction(e[:-1], e[1:])
    return float(np.dot(D.mass_pos, f)), float(np.dot(D.mass_neg, f))


def empirical_risk(h: "ThresholdClassifier", D: Distribution) -> float:
    """0-1 risk ``P(h(X) != Y)``."""
    if isinstance(D, EmpiricalDataset):
        return float(np.mean(h.predict_batch(D.x) != D.y))
    a_pos, a_neg = _accept_pos_neg(h, D)
    return float(D.p_plus - a_pos + a_neg)


risk = empirical_risk


def class_conditional_risks(h: "ThresholdClassifier", D: Distribution) -> tuple[float, float]:
    tpr, fpr = rates(h, D)
    return 1.0 - tpr, fpr


def rates(h: "ThresholdClassifier", D: Distribution) -> tuple[float, float]:
    """``(TPR, FPR)`` of ``h`` under ``D``."""
    _require_both_classes(D)
    a_pos, a_neg = _accept_pos_neg(h, D)
    p = D.p_plus
    return a_pos / p, a_neg / (1.0 - p)


def prediction_marginal(h: "ThresholdClassifier", D: Distribution) -> LabelMarginal:
    """Law of ``h(X)`` as a Bernoulli marginal ``P(h(X) = +1)``."""
    a_pos, a_neg = _accept_pos_neg(h, D)
    return LabelMarginal(min(max(a_pos + a_neg, 0.0), 1.0))


def disagreement(h: "ThresholdClassifier", h2: "ThresholdClassifier", D: Distribution) -> float:
    """``P_D(h(X) != h2(X))``."""
    if isinstance(D, EmpiricalDataset):
        return float(np.mean(h.predict_batch(D.x) != h2.predict_batch(D.x)))
    e = D.edges
    f1 = h.accept_fraction(e[:-1], e[1:])
    f2 = h2.accept_fraction(e[:-1], e[1:])
    m = D.mass_pos + D.mass_neg
    # thresholds are nested, so within a bin the disagreeing share is |f1 - f2|
    return float(np.dot(m, np.abs(f1 - f2)))


# ---------------------------------------------------------------------------
# whole-grid evaluation


@dataclass(frozen=True, eq=False)
class GridProfile:
    """Acceptance statistics of every grid classifier under one distribution."""

    p_plus: float
    accept: np.ndarray
    pos_accept: np.ndarray

    @property
    def errors(self) -> np.ndarray:
        return self.p_plus - self.pos_accept + (self.accept - self.pos_accept)

    @property
    def tpr(self) -> np.ndarray:
        if self.p_plus <= 0:
            raise MissingClass("no positive mass")
        return self.pos_accept / self.p_plus

    @property
    def fpr(self) -> np.ndarray:
        if self.p_plus >= 1:
            raise MissingClass("no negative mass")
        return (self.accept - self.pos_accept) / (1.0 - self.p_plus)

    @property
    def cell_mass(self) -> np.ndarray:
        """Mass of the cells cut out by consecutive grid thresholds."""
        a = np.concatenate(([1.0], self.accept, [0.0]))
        return a[:-1] - a[1:]


def _accepted_counts(scores: np.ndarray, taus: np.ndarray, strict: bool) -> np.ndarray:
    s = np.sort(scores)
    side = "right" if strict else "left"
    return s.size - np.searchsorted(s, taus, side=side)


def grid_profile(D: Distribution, grid: "HypothesisGrid") -> GridProfile:
    from .classifiers import SQUASHED

    taus = grid.tau_array
    if isinstance(D, EmpiricalDataset):
        scores = grid[0].score(D.x)
        strict = grid.mode == SQUASHED
        n = D.n
        pos = D.y == 1
        accept = _accepted_counts(scores, taus, strict) / n
        pos_accept = _accepted_counts(scores[pos], taus, strict) / n
        return GridProfile(D.p_plus, accept, pos_accept)
    e = D.edges
    lo, hi = e[:-1], e[1:]
    frac = np.clip((hi[None, :] - taus[:, None]) / (hi - lo)[None, :], 0.0, 1.0)
    pos_accept = frac @ D.mass_pos
    accept = pos_accept + frac @ D.mass_neg
    return GridProfile(D.p_plus, accept, pos_accept)


def h_divergence(D: Distribution, D2: Distribution, grid: "HypothesisGrid") -> float:
    """``2 * max_{h, h'} |P_D(h != h') - P_D2(h != h')|`` over the threshold grid.

    Grid acceptance regions are nested, so each pairwise disagreement is a
    difference of acceptance rates and the max over pairs reduces to
    ``max - min`` of the acceptance-rate gap.
    """
    gap = grid_profile(D, grid).accept - grid_profile(D2, grid).accept
    return float(2.0 * (gap.max() - gap.min()))


def feature_tv(D: Distribution, D2: Distribution, grid: "HypothesisGrid | None" = None) -> float:
    """TV between feature marginals.

    Binned distributions compare their histograms directly. Samples are
    compared on the partition of score space cut by the grid thresholds, which
    refines every grid classifier's acceptance region.
    """
    if isinstance(D, BinnedJoint1D) and isinstance(D2, BinnedJoint1D):
        return tv_binned(D.marginal, D2.marginal)
    if grid is None:
        raise InvalidConfig("sample-based feature TV needs a hypothesis grid")
    c1 = grid_profile(D, grid).cell_mass
    c2 = grid_profile(D2, grid).cell_mass
    return float(0.5 * np.sum(np.abs(c1 - c2)))


# ---------------------------------------------------------------------------
# importance weighting


def importance_weights(source: BinnedDensity1D, induced: BinnedDensity1D) -> ImportanceWeightMap:
    if not source.same_bins(induced):
        raise MismatchedBins("source and induced densities use different bins")
    s, q = source.mass, induced.mass
    empty = s <= 0
    if np.any(empty & (q > SUPPORT_EPS)):
        raise UnsupportedShift("induced density puts mass where the source has none")
    omega = np.where(empty, 0.0, q / np.where(empty, 1.0, s))
    return ImportanceWeightMap(source.lo, source.hi, omega, s)


def reweighted_risk(h: "ThresholdClassifier", source: Distribution, omega: ImportanceWeightMap) -> float:
    """``E_source[omega_x * 1(h(x) != y)]``."""
    if isinstance(source, EmpiricalDataset):
        w = omega.at(source.x[:, 0])
        return float(np.mean(w * (h.predict_batch(source.x) != source.y)))
    if source.K != omega.K or source.lo != omega.lo or source.hi != omega.hi:
        raise MismatchedBins("weight map is not aligned with the source bins")
    e = source.edges
    f = h.accept_fraction(e[:-1], e[1:])
    # per-bin error mass of h under the source, then reweighted bin by bin
    return float(np.sum(omega.omega * (source.mass_pos * (1.0 - f) + source.mass_neg * f)))
