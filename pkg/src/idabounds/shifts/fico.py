"""Credit-score dynamics: group score densities, features, and the multiplicative update."""

from __future__ import annotations

import csv
from math import lgamma
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..distributions import BinnedDensity1D, EmpiricalDataset
from ..errors import InvalidConfig, NonMonotoneCDF, OutOfDomain, ParseError
from .base import OTHER

Q_FLOOR = 1e-12


@dataclass(frozen=True)
class FicoConfig:
    eps1: float = 0.1
    eps2: float = 0.1
    sigma: float = 0.1
    alpha_D: float = 0.01
    alpha_Y: float = 0.005

    def __post_init__(self):
        if min(self.eps1, self.eps2, self.sigma) < 0:
            raise InvalidConfig("noise scales must be nonnegative")


def _check_q(Q) -> np.ndarray:
    q = np.asarray(Q, dtype=float)
    if np.any((q <= 0) | (q > 1)) or not np.all(np.isfinite(q)):
        raise OutOfDomain("scores must lie in (0, 1]")
    return q


def fico_features(Q, A, cfg: FicoConfig, rng: np.random.Generator) -> np.ndarray:
    """Features ``(1.5Q + U[-e1, e1], 0.8A + U[-e2, e2], A + N(0, s^2))``; one row per agent."""
    q = _check_q(Q)
    a = np.broadcast_to(np.asarray(A, dtype=float), q.shape)
    shape = q.shape
    x1 = 1.5 * q + rng.uniform(-cfg.eps1, cfg.eps1, shape)
    x2 = 0.8 * a + rng.uniform(-cfg.eps2, cfg.eps2, shape)
    x3 = a + rng.normal(0.0, cfg.sigma, shape)
    return np.stack((x1, x2, x3), axis=-1)


def fico_update(Q, D, Y, cfg: FicoConfig):
    """``Q * (1 + alpha_D 1[D=1] + alpha_Y 1[Y=1])`` clamped into ``(0, 1]``."""
    q = _check_q(Q)
    d = (np.asarray(D) == 1).astype(float)
    y = (np.asarray(Y) == 1).astype(float)
    out = np.clip(q * (1.0 + cfg.alpha_D * d + cfg.alpha_Y * y), Q_FLOOR, 1.0)
    return float(out) if out.ndim == 0 else out


def ingest_group_cdf(path: str | Path, K: int | None = None) -> dict[str, BinnedDensity1D]:
    """Read a ``score,group_a,...`` CDF table and difference it into per-group densities.

    Equally spaced score rows become the bins directly. Otherwise the CDF is
    linearly interpolated onto ``K`` (default 512) equal bins spanning the score
    range.
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 3:
        raise ParseError("need a header and at least two CDF rows")
    header = [h.strip() for h in rows[0]]
    if header[0] != "score" or len(header) < 2:
        raise ParseError("header must be 'score,group_a,...'")
    try:
        table = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ParseError(f"non-numeric CDF entry: {exc}") from exc
    if table.shape[1] != len(header):
        raise ParseError("row length does not match header")
    score, cdfs = table[:, 0], table[:, 1:]
    if np.any(np.diff(score) <= 0) or score[0] < 0 or score[-1] > 1:
        raise ParseError("score column must be strictly increasing in [0, 1]")
    if np.any((cdfs < 0) | (cdfs > 1)):
        raise ParseError("CDF values must lie in [0, 1]")
    if np.any(np.diff(cdfs, axis=0) < 0):
        raise NonMonotoneCDF("CDF column decreases")
    return densities_from_cdf(score, cdfs, header[1:], K)


def densities_from_cdf(score: np.ndarray, cdfs: np.ndarray, names, K: int | None = None) -> dict[str, BinnedDensity1D]:
    score = np.asarray(score, dtype=float)
    cdfs = np.asarray(cdfs, dtype=float)
    lo, hi = float(score[0]), float(score[-1])
    steps = np.diff(score)
    if K is None and score.size >= 3 and np.allclose(steps, steps[0], rtol=0, atol=1e-9):
        edges = score
    else:
        edges = np.linspace(lo, hi, (K or 512) + 1)
    out = {}
    for j, name in enumerate(names):
        mass = np.diff(np.interp(edges, score, cdfs[:, j]))
        if mass.sum() <= 0:
            raise ParseError(f"group {name!r} has no mass inside the score range")
        out[name] = BinnedDensity1D.normalized(lo, hi, mass)
    return out


def synthetic_group_cdf(K: int = 100, params=((2.0, 5.0), (3.0, 4.0), (4.0, 3.0), (5.0, 2.0))
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Beta-distribution CDFs on ``K + 1`` equally spaced scores; returns ``(score, cdf)``."""
    score = np.linspace(0.0, 1.0, K + 1)
    fine = np.linspace(0.0, 1.0, 64 * K + 1)
    mid = 0.5 * (fine[1:] + fine[:-1])
    cols = []
    for a, b in params:
        logc = lgamma(a + b) - lgamma(a) - lgamma(b)
        dens = np.exp(logc + (a - 1) * np.log(mid) + (b - 1) * np.log1p(-mid))
        cdf = np.concatenate(([0.0], np.cumsum(dens) / dens.sum()))
        cols.append(cdf[:: 64])
    return score, np.column_stack(cols)


def write_group_cdf(path: str | Path, score: np.ndarray, cdf: np.ndarray, names) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["score", *names])
        for s, row in zip(score, cdf):
            w.writerow([f"{s:.12g}", *(f"{v:.12g}" for v in row)])


@dataclass(frozen=True, eq=False)
class FicoState:
    """A population of agents: latent scores ``q``, group codes ``a`` and the observed dataset."""

    q: np.ndarray
    a: np.ndarray
    data: EmpiricalDataset

    @classmethod
    def draw(cls, q: np.ndarray, a: np.ndarray, group: np.ndarray, cfg: FicoConfig,
             rng: np.random.Generator, tag: str = "source") -> "FicoState":
        q = _check_q(q)
        x = fico_features(q, a, cfg, rng)
        y = np.where(rng.random(q.size) < q, 1, -1)
        return cls(q, np.asarray(a, dtype=float), EmpiricalDataset(x, y, group, tag))


def balanced_population(densities: dict[str, BinnedDensity1D], per_group: int,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Equal counts per group; scores uniform inside their density bin.

    Returns ``(q, a, group)`` with ``a = g / (G - 1)`` encoding group ``g``.
    """
    G = len(densities)
    qs, gs = [], []
    for g, dens in enumerate(densities.values()):
        k = rng.choice(dens.K, size=per_group, p=dens.mass)
        width = (dens.hi - dens.lo) / dens.K
        qs.append(dens.lo + (k + rng.random(per_group)) * width)
        gs.append(np.full(per_group, g))
    q = np.clip(np.concatenate(qs), Q_FLOOR, 1.0)
    group = np.concatenate(gs)
    a = group / max(G - 1, 1)
    return q, a, group


@dataclass(frozen=True)
class FicoStep:
    """One step of the dynamics: decisions from ``h`` update every agent's score."""

    cfg: FicoConfig
    state: FicoState
    shift_type: str = OTHER

    def next_state(self, h, seed: int = 0) -> FicoState:
        rng = np.random.default_rng(seed)
        d = h.predict_batch(self.state.data.x) == 1
        q_new = fico_update(self.state.q, d.astype(int), (self.state.data.y == 1).astype(int), self.cfg)
        return FicoState.draw(q_new, self.state.a, self.state.data.group, self.cfg, rng, "induced")

    def induce(self, source, h, seed: int = 0) -> EmpiricalDataset:
        if source is not self.state.data:
            raise InvalidConfig("FICO step must be applied to its own population")
        return self.next_state(h, seed).data
