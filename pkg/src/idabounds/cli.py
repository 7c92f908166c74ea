"""Command-line entry point: ``idabounds <shift|fico|replicator|bandit|bounds> [options]``."""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import __version__, harness
from .errors import ConfigError, IdaError, InvariantViolation, NonMonotoneCDF, ParseError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

DEFAULT_KIND = {"shift": "strategic", "fico": "fico", "replicator": "replicator",
                "bandit": "bandit", "bounds": "strategic"}


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def render_csv(rows: Sequence[Mapping[str, Any]], provenance: Mapping[str, Any]) -> str:
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    for k in sorted(provenance):
        buf.write(f"# {k}={json.dumps(provenance[k], sort_keys=True)}\n")
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(r[c]) if c in r else "" for c in cols) + "\n")
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="idabounds", description=__doc__)
    p.add_argument("--version", action="version", version=f"idabounds {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("shift", "one step of a shift experiment with every bound"),
                        ("fico", "credit-score dynamics over several steps"),
                        ("replicator", "induced-risk optimization sweep under replicator dynamics"),
                        ("bandit", "one-point bandit gradient descent trace"),
                        ("bounds", "per-threshold bound sweep over the grid")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="JSON config with an 'experiment' key")
        sp.add_argument("--seed", type=int, help="root seed (required here or in the config)")
        sp.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
        sp.add_argument("--grid", type=int, help="number of thresholds")
        sp.add_argument("--samples", type=int, help="sample size for sampled models")
        if name in ("shift", "bounds"):
            sp.add_argument("--kind", choices=harness.SHIFT_KINDS, help="experiment kind when no config is given")
        if name == "fico":
            sp.add_argument("--steps", type=int, help="number of dynamics steps")
            sp.add_argument("--cdf", type=Path, help="group CDF file 'score,group_a,...'")
    return p


def _config(args) -> harness.ExperimentConfig:
    overrides = {"seed": args.seed, "grid": args.grid, "samples": args.samples,
                 "steps": getattr(args, "steps", None),
                 "out": str(args.out) if args.out else None}
    kind = getattr(args, "kind", None)
    if args.config is not None:
        cfg = harness.ExperimentConfig.load(args.config, **overrides)
        if kind is not None and kind != cfg.experiment:
            raise ConfigError(f"--kind {kind} conflicts with config experiment {cfg.experiment}")
    else:
        cfg = harness.ExperimentConfig.from_mapping({"experiment": kind or DEFAULT_KIND[args.command]}, **overrides)
    expected = {"fico": ("fico",), "replicator": ("replicator",), "bandit": ("bandit",)}.get(args.command,
                                                                                             harness.SHIFT_KINDS)
    if cfg.experiment not in expected:
        raise ConfigError(f"'{args.command}' cannot run experiment {cfg.experiment!r}")
    return cfg


def _base_provenance(cfg: harness.ExperimentConfig, command: str) -> dict[str, Any]:
    return {"command": command, "experiment": cfg.experiment, "seed": cfg.seed, "grid": cfg.grid,
            "samples": cfg.samples, "version": __version__}


def run(args) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    cfg = _config(args)
    prov = _base_provenance(cfg, args.command)
    if args.command == "shift":
        setup = harness.build_setup(cfg.experiment, cfg.params, cfg.grid, cfg.samples, cfg.seed)
        records = [harness.StepRecord(0, harness.evaluate_step(setup))]
        prov.update({f"param.{k}": v for k, v in setup.provenance.items()})
        rows = [r.row() for r in records]
        return rows, prov | {"_check": records}
    if args.command == "fico":
        cdf = str(args.cdf) if args.cdf else None
        records = harness.run_fico_sequence(cfg, cdf)
        prov["steps"] = cfg.steps
        prov.update({f"param.{k}": v for k, v in harness.fico_provenance(cfg, cdf).items()})
        return [r.row() for r in records], prov | {"_check": records}
    if args.command == "replicator":
        rows = harness.run_replicator_improvement(cfg)
        prov.update({f"param.{k}": v for k, v in harness.replicator_provenance(cfg).items()})
        bad = [r for r in rows if r["improvement"] < -1e-9]
        if bad:
            raise InvariantViolation(f"negative improvement for {bad[0]['utility']} p0={bad[0]['p0']}")
        return rows, prov
    if args.command == "bandit":
        toy, bcfg = harness.bandit_setup(cfg.params)
        prov.update({f"param.{k}": v for k, v in harness.bandit_provenance(toy, bcfg).items()})
        return harness.run_bandit(cfg), prov
    setup = harness.build_setup(cfg.experiment, cfg.params, cfg.grid, cfg.samples, cfg.seed)
    rows = harness.bound_sweep(setup)
    prov.update({f"param.{k}": v for k, v in setup.provenance.items()})
    bad = harness.sweep_violations(rows)
    if bad:
        prov["_violations"] = bad
    return rows, prov


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        rows, prov = run(args)
    except (ConfigError, ParseError, NonMonotoneCDF) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except IdaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    records = prov.pop("_check", None)
    violations = prov.pop("_violations", None)
    text = render_csv(rows, prov)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    try:
        if records is not None:
            harness.check_records(records)
        if violations:
            raise InvariantViolation(violations[0])
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
