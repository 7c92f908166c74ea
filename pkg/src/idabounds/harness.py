"""Experiment loops: build a source, find the source- and induced-optimal classifiers, record bounds."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import bounds as bd
from .classifiers import DEFAULT_GRID_SIZE, SQUASHED, HypothesisGrid, argmin_smallest, train_base_scorer
from .distributions import (BinnedJoint1D, Distribution, empirical_risk, feature_tv, grid_profile, h_divergence,
                            importance_weights, prediction_marginal, rates, tv_binary)
from .errors import ConfigError, IdaError, InvariantViolation
from .optimizers import (BanditConfig, QuadraticToy, bandit_gd_trace, improvement_from_risks, induced_risks,
                         replicator_closed_form_risk, replicator_gd, replicator_source_risk)
from .shifts import (COVARIATE, TARGET, CovariateDagConfig, CovariateDagShift, FicoConfig, FicoState, FicoStep,
                     IdentityShift, LabelConditional, ReplicatorConfig, ReplicatorShift, StrategicConfig,
                     StrategicShift, TargetDagConfig, TargetDagShift, balanced_population, covariate_dag_sample,
                     densities_from_cdf, ingest_group_cdf, strategic_source, synthetic_group_cdf, target_dag_sample)

SHIFT_KINDS = ("identity", "strategic", "replicator", "covariate-dag", "target-dag")
KINDS = SHIFT_KINDS + ("fico", "bandit")
DEFAULT_SAMPLES = 40000
DEFAULT_STEPS = 15
DEFAULT_BINS = 512


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    grid: int = DEFAULT_GRID_SIZE
    samples: int = DEFAULT_SAMPLES
    steps: int = DEFAULT_STEPS
    out: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in KINDS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {KINDS}")
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("a nonnegative integer seed is required")
        if self.samples < 100:
            raise ConfigError("samples must be at least 100")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if self.grid < 2:
            raise ConfigError("grid must have at least two thresholds")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any], **overrides) -> "ExperimentConfig":
        data = dict(raw)
        for k, v in overrides.items():
            if v is not None:
                data[k] = v
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        if "seed" not in data:
            raise ConfigError("config needs a seed")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_mapping(raw, **overrides)


def _build(cls, params: Mapping[str, Any], **fixed):
    names = {f.name for f in dataclasses.fields(cls)}
    extra = set(params) - names
    if extra:
        raise ConfigError(f"unknown {cls.__name__} parameters: {sorted(extra)}")
    try:
        return cls(**{**params, **fixed})
    except (TypeError, ValueError, IdaError) as exc:
        raise ConfigError(f"bad {cls.__name__} parameters: {exc}") from exc


def _split(params: Mapping[str, Any], keys: tuple[str, ...]) -> tuple[dict, dict]:
    own = {k: v for k, v in params.items() if k in keys}
    rest = {k: v for k, v in params.items() if k not in keys}
    return own, rest


@dataclass(frozen=True)
class Setup:
    """A source distribution, a hypothesis grid and a shift model ready for evaluation."""

    kind: str
    source: Distribution
    grid: HypothesisGrid
    model: Any
    seed: int
    provenance: Mapping[str, Any]


def _stream_seeds(seed: int, count: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> 1) for c in ss.spawn(count)]


def build_setup(kind: str, params: Mapping[str, Any], grid_size: int = DEFAULT_GRID_SIZE,
                samples: int = DEFAULT_SAMPLES, seed: int = 0) -> Setup:
    params = dict(params)
    data_seed, shift_seed = _stream_seeds(seed, 2)
    if kind in ("identity", "strategic"):
        own, rest = _split(params, ("bins", "conditional"))
        cond = _build(LabelConditional, own.get("conditional", {}))
        K = int(own.get("bins", DEFAULT_BINS))
        source = strategic_source(K, cond)
        if kind == "identity":
            if rest:
                raise ConfigError(f"unknown identity parameters: {sorted(rest)}")
            grid = HypothesisGrid.uniform(grid_size)
            model = IdentityShift()
            prov = {"bins": K, "conditional": dataclasses.asdict(cond)}
        else:
            scfg = _build(StrategicConfig, {"B": 0.2, **rest})
            grid = HypothesisGrid.uniform(grid_size).restrict(scfg.B, 1.0 - scfg.B)
            model = StrategicShift(scfg, cond)
            prov = {"bins": K, "conditional": dataclasses.asdict(cond), **dataclasses.asdict(scfg)}
        return Setup(kind, source, grid, model, shift_seed, prov)
    if kind == "replicator":
        own, rest = _split(params, ("bins",))
        rcfg = _build(ReplicatorConfig, rest)
        K = int(own.get("bins", DEFAULT_BINS))
        prov = {"bins": K, **_replicator_prov(rcfg)}
        return Setup(kind, rcfg.source(K), HypothesisGrid.uniform(grid_size), ReplicatorShift(rcfg.U),
                     shift_seed, prov)
    if kind in ("covariate-dag", "target-dag"):
        own, rest = _split(params, ("epochs", "lr", "regenerate"))
        epochs, lr = int(own.get("epochs", 500)), float(own.get("lr", 0.5))
        rng = np.random.default_rng(data_seed)
        if kind == "covariate-dag":
            ccfg = _build(CovariateDagConfig, rest)
            source = covariate_dag_sample(samples, ccfg, rng)
            model = CovariateDagShift(ccfg, bool(own.get("regenerate", True)))
            prov = {**dataclasses.asdict(ccfg), "regenerate": model.regenerate}
        else:
            tcfg = _build(TargetDagConfig, rest)
            source = target_dag_sample(samples, tcfg, rng)
            model = TargetDagShift(tcfg)
            prov = dataclasses.asdict(tcfg)
        scorer = train_base_scorer(source, epochs, lr)
        prov.update({"epochs": epochs, "lr": lr, "scorer": scorer.to_text()})
        return Setup(kind, source, HypothesisGrid.uniform(grid_size, scorer, SQUASHED), model, shift_seed, prov)
    raise ConfigError(f"{kind!r} is not a single-shift experiment")


def _replicator_prov(cfg: ReplicatorConfig) -> dict:
    return {"p0": cfg.p0.p_plus, "mu_plus": cfg.mu_plus, "mu_minus": cfg.mu_minus, "sigma": cfg.sigma,
            "U": [list(r) for r in cfg.U]}


# ---------------------------------------------------------------------------
# one step of bound evaluation


@dataclass(frozen=True)
class StepRecord:
    step: int
    report: bd.BoundReport

    def row(self) -> dict[str, Any]:
        return {"step": self.step, **self.report.row()}


def evaluate_step(setup: Setup, ub_kind: str | None = None) -> bd.BoundReport:
    """Find ``h_S*`` and ``h_T*`` on the grid, induce both, and assemble every bound."""
    src, grid, model, seed = setup.source, setup.grid, setup.model, setup.seed
    src_err = grid_profile(src, grid).errors
    i_s = argmin_smallest(src_err)
    ind_err = induced_risks(grid, src, model, seed)
    i_t = argmin_smallest(ind_err)
    hS, hT = grid[i_s], grid[i_t]
    D_hS, D_hT = model.induce(src, hS, seed), model.induce(src, hT, seed)

    diff = float(ind_err[i_s] - ind_err[i_t])
    err_s_ht = float(src_err[i_t])
    max_pair = max(err_s_ht, float(ind_err[i_t]))

    ub_src = bd.ub_source_to_induced(hS, src, D_hS, grid)
    ub_opt = bd.ub_induced_to_optimal(hS, D_hS, hT, D_hT, grid)
    lb_pred = bd.lb_tradeoff(hT, src, D_hT)
    lb_feat = bd.lb_tradeoff_features(hT, src, D_hT, grid)
    ce = bd.combined_errors(hS, D_hS, D_hT, grid)
    comp = {
        "tau_s": hS.tau, "tau_t": hT.tau,
        "err_src_hs": float(src_err[i_s]), "err_src_ht": err_s_ht,
        "err_ind_hs": float(ind_err[i_s]), "err_ind_ht": float(ind_err[i_t]),
        "p_src": src.label_marginal().p_plus, "p_hs": D_hS.label_marginal().p_plus,
        "p_ht": D_hT.label_marginal().p_plus,
        "tv_y": tv_binary(src.label_marginal(), D_hT.label_marginal()),
        "tv_h": tv_binary(prediction_marginal(hT, src), prediction_marginal(hT, D_hT)),
        "tv_x": feature_tv(src, D_hT, grid),
        "d_h": h_divergence(D_hT, D_hS, grid),
        "lambda": ce.lambda_min, "Lambda": ce.lambda_max_of_h,
    }
    shift_type = getattr(model, "shift_type", None)
    kind = ub_kind or _default_ub_kind(setup)
    ub = ub_opt
    if shift_type == COVARIATE and isinstance(src, BinnedJoint1D):
        w_s = importance_weights(src.marginal, D_hS.marginal)
        w_t = importance_weights(src.marginal, D_hT.marginal)
        comp.update({"var_omega_s": w_s.variance(), "var_omega_t": w_t.variance(),
                     "ub_weights": bd.cs_ub_suboptimality(hS, hT, src, w_s, w_t)})
    if shift_type == TARGET:
        tpr, fpr = rates(hT, src)
        comp.update({"tpr_src_ht": tpr, "fpr_src_ht": fpr,
                     "lb_target": bd.ts_lb(comp["p_src"], comp["p_ht"], tpr, fpr),
                     "ub_target": bd.ts_ub(hS, hT, src, (comp["p_hs"], comp["p_ht"]))})
    if kind == "strategic":
        comp["ub_strategic"] = bd.strategic_ub(setup.model.cfg.B, err_s_ht)
        ub = comp["ub_strategic"]
    elif kind == "target":
        ub = comp["ub_target"]
    comp["ub_kind"] = kind
    return bd.BoundReport(diff, max_pair, ub, lb_pred, ub_src, ub_opt, lb_pred, lb_feat, comp)


def _default_ub_kind(setup: Setup) -> str:
    if setup.kind == "strategic":
        return "strategic"
    if setup.kind in ("replicator", "target-dag"):
        return "target"
    return "general"


def check_records(records: list[StepRecord], tol: float = bd.TOL) -> None:
    for rec in records:
        bad = rec.report.violations(tol)
        if bad:
            raise InvariantViolation(f"step {rec.step}: " + "; ".join(bad))


def run_shift_experiment(cfg: ExperimentConfig) -> list[StepRecord]:
    if cfg.experiment not in SHIFT_KINDS:
        raise ConfigError(f"shift experiments cover {SHIFT_KINDS}, got {cfg.experiment!r}")
    setup = build_setup(cfg.experiment, cfg.params, cfg.grid, cfg.samples, cfg.seed)
    return [StepRecord(0, evaluate_step(setup))]


# ---------------------------------------------------------------------------
# credit-score dynamics


FICO_KEYS = ("cdf_path", "bins", "epochs", "lr")


def fico_densities(params: Mapping[str, Any]):
    path = params.get("cdf_path")
    if path:
        return ingest_group_cdf(path)
    score, cdf = synthetic_group_cdf()
    return densities_from_cdf(score, cdf, ("group_a", "group_b", "group_c", "group_d"))


def run_fico_sequence(cfg: ExperimentConfig, cdf_path: str | None = None) -> list[StepRecord]:
    params = dict(cfg.params)
    if cdf_path is not None:
        params["cdf_path"] = cdf_path
    own, rest = _split(params, FICO_KEYS)
    fcfg = _build(FicoConfig, rest)
    epochs, lr = int(own.get("epochs", 500)), float(own.get("lr", 0.5))
    dens = fico_densities(own)
    per_group = cfg.samples // len(dens)
    pop_seed, *step_seeds = _stream_seeds(cfg.seed, cfg.steps + 1)
    rng = np.random.default_rng(pop_seed)
    q, a, group = balanced_population(dens, per_group, rng)
    state = FicoState.draw(q, a, group, fcfg, rng)
    records = []
    for k in range(cfg.steps):
        scorer = train_base_scorer(state.data, epochs, lr)
        grid = HypothesisGrid.uniform(cfg.grid, scorer, SQUASHED)
        model = FicoStep(fcfg, state)
        setup = Setup("fico", state.data, grid, model, step_seeds[k], {})
        report = evaluate_step(setup, "general")
        comp = dict(report.components)
        comp["mean_q"] = float(np.mean(state.q))
        records.append(StepRecord(k, dataclasses.replace(report, components=comp)))
        state = model.next_state(grid[argmin_smallest(_src_errors(state.data, grid))], step_seeds[k])
    return records


def _src_errors(D, grid):
    return grid_profile(D, grid).errors


def fico_provenance(cfg: ExperimentConfig, cdf_path: str | None = None) -> dict:
    params = dict(cfg.params)
    if cdf_path is not None:
        params["cdf_path"] = cdf_path
    own, rest = _split(params, FICO_KEYS)
    fcfg = _build(FicoConfig, rest)
    groups = len(fico_densities(own))
    return {**dataclasses.asdict(fcfg), "epochs": own.get("epochs", 500), "lr": own.get("lr", 0.5),
            "cdf_path": own.get("cdf_path", "synthetic beta CDFs, 4 groups"),
            "per_group": cfg.samples // groups}


# ---------------------------------------------------------------------------
# replicator induced-risk optimization


DEFAULT_UTILITIES = {
    "symmetric": ((1.0, 0.5), (0.5, 1.0)),
    "reward-accept": ((1.2, 0.8), (0.7, 1.5)),
    "qualified-bonus": ((1.5, 1.0), (0.5, 1.0)),
    "lenient": ((1.3, 0.9), (2.0, 2.0)),
}
DEFAULT_P0 = (0.3, 0.4, 0.5, 0.6, 0.7)
ORACLE_POINTS = 2001


def run_replicator_improvement(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    params = dict(cfg.params)
    utils = params.pop("utilities", DEFAULT_UTILITIES)
    p0s = params.pop("p0", DEFAULT_P0)
    lr = float(params.pop("lr", 0.05))
    iters = int(params.pop("iters", 1000))
    if not utils or not p0s:
        raise ConfigError("need at least one utility matrix and one p0")
    oracle = np.linspace(0.0, 1.0, ORACLE_POINTS)
    taus = np.linspace(0.0, 1.0, cfg.grid)
    rows = []
    for tag, U in utils.items():
        for p0 in p0s:
            rcfg = _build(ReplicatorConfig, {**params, "p0": p0, "U": U})
            i_s = argmin_smallest(replicator_source_risk(taus, rcfg))
            tau_s = float(taus[i_s])
            risk_s = replicator_closed_form_risk(tau_s, rcfg)
            tau_gd = replicator_gd(rcfg, lr, iters, tau_s)
            risk_gd = replicator_closed_form_risk(tau_gd, rcfg)
            risk_or = float(np.min(replicator_closed_form_risk(oracle, rcfg)))
            rows.append({"utility": tag, "p0": float(p0), "source_accuracy": 1.0 - risk_s,
                         "improvement": improvement_from_risks(risk_s, risk_gd),
                         "tau_s": tau_s, "tau_gd": tau_gd, "risk_gd": risk_gd, "risk_oracle": risk_or})
    return rows


def replicator_provenance(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.params)
    return {"utilities": {k: [list(r) for r in v] for k, v in params.pop("utilities", DEFAULT_UTILITIES).items()},
            "p0": list(params.pop("p0", DEFAULT_P0)), "lr": params.pop("lr", 0.05),
            "iters": params.pop("iters", 1000), "oracle_points": ORACLE_POINTS,
            **{k: v for k, v in dataclasses.asdict(ReplicatorConfig()).items() if k not in ("p0", "U")}, **params}


# ---------------------------------------------------------------------------
# bandit optimizer


def bandit_setup(params: Mapping[str, Any]) -> tuple[QuadraticToy, BanditConfig]:
    own, rest = _split(params, ("mu0", "eps", "s"))
    toy = _build(QuadraticToy, {k: tuple(v) if k == "mu0" else v for k, v in own.items()})
    bcfg = _build(BanditConfig, {**rest, "dim": toy.dim})
    return toy, bcfg


def bandit_provenance(toy: QuadraticToy, bcfg: BanditConfig) -> dict:
    return {**dataclasses.asdict(toy), **dataclasses.asdict(bcfg), "toy_min_risk": toy.min_risk}


def run_bandit(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    toy, bcfg = bandit_setup(cfg.params)
    rng = np.random.default_rng(_stream_seeds(cfg.seed, 1)[0])
    tr = bandit_gd_trace(toy.problem(), bcfg, rng)
    return [{"round": int(r), "ir": float(ir), "theta_norm": float(nm)}
            for r, ir, nm in zip(tr.rounds, tr.ir, tr.theta_norm)]


# ---------------------------------------------------------------------------
# per-threshold bound sweep


def bound_sweep(setup: Setup) -> list[dict[str, Any]]:
    """Every grid classifier's errors next to the general upper and lower bounds."""
    src, grid, model, seed = setup.source, setup.grid, setup.model, setup.seed
    ind = [model.induce(src, h, seed) for h in grid]
    ind_err = np.array([empirical_risk(h, D) for h, D in zip(grid, ind)])
    i_t = argmin_smallest(ind_err)
    hT, D_hT = grid[i_t], ind[i_t]
    rows = []
    for h, D_h, e_ind in zip(grid, ind, ind_err):
        e_src = empirical_risk(h, src)
        row = {"tau": h.tau, "err_src": e_src, "err_ind": float(e_ind),
               "ub_source": bd.ub_source_to_induced(h, src, D_h, grid),
               "gap_opt": float(e_ind - ind_err[i_t]),
               "ub_optimal": bd.ub_induced_to_optimal(h, D_h, hT, D_hT, grid),
               "max_err": max(e_src, float(e_ind)),
               "lb_tradeoff": bd.lb_tradeoff(h, src, D_h),
               "lb_features": bd.lb_tradeoff_features(h, src, D_h, grid)}
        if getattr(model, "shift_type", None) == TARGET:
            tpr, fpr = rates(h, src)
            row["lb_target"] = bd.ts_lb(src.label_marginal().p_plus, D_h.label_marginal().p_plus, tpr, fpr)
        rows.append(row)
    return rows


def sweep_violations(rows: list[dict[str, Any]], tol: float = bd.TOL) -> list[str]:
    bad = []
    for r in rows:
        t = r["tau"]
        if r["err_ind"] > r["ub_source"] + tol:
            bad.append(f"tau={t}: source-to-induced bound fails")
        if r["gap_opt"] > r["ub_optimal"] + tol:
            bad.append(f"tau={t}: induced-to-optimal bound fails")
        if r["lb_tradeoff"] > r["max_err"] + tol:
            bad.append(f"tau={t}: tradeoff lower bound fails")
        if r["lb_features"] > r["lb_tradeoff"] + tol:
            bad.append(f"tau={t}: feature lower bound exceeds prediction lower bound")
        if "lb_target" in r and r["lb_target"] > r["max_err"] + tol:
            bad.append(f"tau={t}: target-shift lower bound fails")
    return bad
