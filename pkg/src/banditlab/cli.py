"""Command-line entry point: ``banditlab {synthetic,molsearch,oracle-eval}``."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ArmSpec, OracleKind, oracle_value
from .experiments import (PROBLEMS, aggregate, derive_seed, emit_csv,
                          emit_summary_csv, run_many)
from .molecules import DEFAULT_DEPTH_CAP, load_property_model, mcts_search
from .policies import parse_policy

PROPERTIES = ("tb", "pc", "eta", "tpsa")
MOLSEARCH_FIELDS = ["run_id", "trial", "r_max", "best_smiles"]


@dataclass
class RunConfig:
    command: str
    policy: str = "piucb2"
    runs: int = 100
    seed: int = 0
    out: str | None = None
    threads: int = 1
    problem: str = "easy"
    horizon: int = 10_000
    summary: str | None = None
    property: str = "tb"
    trials: int = 3000
    depth_cap: int = DEFAULT_DEPTH_CAP
    viscosity_temperature: float = 300.0
    kind: str | None = None
    mu: float | None = None
    sigma: float | None = None
    r_max: float | None = None


def _common(p, out_default):
    p.add_argument("--config", metavar="FILE",
                   help="flat key=value file; command-line flags override it "
                        "(default: none)")
    p.add_argument("--policy", default="piucb2",
                   help="ucb[:c], maxsearch[:c_mu,c_sigma], piucb:c_mu,c_sigma, "
                        "piucb1, piucb2 or random (default: %(default)s)")
    p.add_argument("--runs", type=int, default=100,
                   help="independent replications (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0,
                   help="master seed; per-run seeds derive from it (default: %(default)s)")
    p.add_argument("--out", default=out_default,
                   help="per-run CSV output path (default: %(default)s)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="parallel worker processes (default: available cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditlab",
        description="UCB policies over oracle quantities: synthetic max-bandit "
                    "benchmarks and grammar-based MCTS molecule search.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    syn = sub.add_parser("synthetic", help="run a synthetic Gaussian bandit benchmark")
    syn.add_argument("--problem", default="easy",
                     help=f"one of {', '.join(PROBLEMS)} (default: %(default)s)")
    syn.add_argument("--horizon", type=int, default=10_000,
                     help="rounds per run (default: %(default)s)")
    syn.add_argument("--summary", metavar="FILE", default=None,
                     help="also write t,metric,mean,stderr to FILE (default: off)")
    _common(syn, "synthetic_runs.csv")

    mol = sub.add_parser("molsearch", help="MCTS molecule search for a target property")
    mol.add_argument("--property", default="tb",
                     help=f"one of {', '.join(PROPERTIES)} (default: %(default)s)")
    mol.add_argument("--trials", type=int, default=3000,
                     help="molecules generated per run (default: %(default)s)")
    mol.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP,
                     help="grammar nesting depth limit (default: %(default)s)")
    mol.add_argument("--viscosity-temperature", type=float, default=300.0,
                     help="temperature in K for the viscosity estimate (default: %(default)s)")
    _common(mol, "molsearch_runs.csv")

    ora = sub.add_parser("oracle-eval", help="print the oracle quantity of one Gaussian arm")
    ora.add_argument("kind", help="mean, ei or pi")
    ora.add_argument("mu", type=float, help="arm mean")
    ora.add_argument("sigma", type=float, help="arm standard deviation (> 0)")
    ora.add_argument("r_max", type=float, help="current maximum reward")
    return parser


def _read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        return action.choices[name]


def parse_config(argv=None) -> RunConfig:
    """Parse command-line flags, merged over an optional ``--config`` file."""
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = _subparser(parser, args.command)
    if getattr(args, "config", None):
        try:
            file_values = _read_config_file(args.config)
        except (OSError, ValueError) as exc:
            sub.error(str(exc))
        allowed = {a.dest for a in sub._actions if a.option_strings} - {"help", "config"}
        unknown = sorted(set(file_values) - allowed)
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**file_values)
        args = parser.parse_args(argv)
    values = {k: v for k, v in vars(args).items() if k != "config"}
    cfg = RunConfig(**values)
    try:
        _validate(cfg)
    except ValueError as exc:
        sub.error(str(exc))
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.command == "oracle-eval":
        OracleKind.parse(cfg.kind)
        ArmSpec(cfg.mu, cfg.sigma)
        return
    parse_policy(cfg.policy)
    if cfg.runs < 1:
        raise ValueError("--runs must be >= 1")
    if cfg.threads < 1:
        raise ValueError("--threads must be >= 1")
    if cfg.command == "synthetic":
        if cfg.problem not in PROBLEMS:
            raise ValueError(f"--problem must be one of {', '.join(PROBLEMS)}")
        if cfg.horizon < 1:
            raise ValueError("--horizon must be >= 1")
    else:
        if cfg.property not in PROPERTIES:
            raise ValueError(f"--property must be one of {', '.join(PROPERTIES)}")
        if cfg.trials < 1:
            raise ValueError("--trials must be >= 1")
        if cfg.depth_cap < 1:
            raise ValueError("--depth-cap must be >= 1")
        if not cfg.viscosity_temperature > 0:
            raise ValueError("--viscosity-temperature must be positive")


def _run_synthetic(cfg: RunConfig) -> int:
    problem = PROBLEMS[cfg.problem].with_horizon(cfg.horizon)
    policy = parse_policy(cfg.policy)
    runs = run_many(problem, policy, cfg.runs, cfg.seed, workers=cfg.threads)
    emit_csv(runs, cfg.out)
    if cfg.summary:
        if len(runs) < 2:
            print("error: --summary needs at least two runs", file=sys.stderr)
            return 1
        emit_summary_csv(aggregate(runs), cfg.summary)
    r_max = np.mean([r.r_max[-1] for r in runs])
    fails = np.mean([r.failures[-1] for r in runs])
    print(f"{problem.name} {policy.name}: runs={len(runs)} T={problem.horizon} "
          f"mean r_max={r_max:.4f} mean N(T)={fails:.2f}")
    return 0


def _molsearch_job(args):
    prop, directory, temperature, policy, trials, seed, depth_cap = args
    model = load_property_model(prop, directory, temperature)
    return mcts_search(model, policy, trials, seed, depth_cap)


def _run_molsearch(cfg: RunConfig) -> int:
    from .molecules.properties import data_dir

    directory = data_dir()
    # Load once up front so a missing table fails before any work starts.
    load_property_model(cfg.property, directory, cfg.viscosity_temperature)
    policy = parse_policy(cfg.policy)
    seeds = [derive_seed(cfg.seed, i) for i in range(cfg.runs)]
    jobs = [(cfg.property, directory, cfg.viscosity_temperature, policy, cfg.trials, s, cfg.depth_cap)
            for s in seeds]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_molsearch_job, jobs))
    else:
        results = [_molsearch_job(j) for j in jobs]
    try:
        fh = open(cfg.out, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {cfg.out}: {exc.strerror or exc}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MOLSEARCH_FIELDS)
        for run_id, res in enumerate(results):
            for trial, (rm, smi) in enumerate(zip(res.r_max, res.best_per_trial), 1):
                w.writerow([run_id, trial, repr(float(rm)), smi])
    finals = [res.best_value for res in results]
    best = max(results, key=lambda r: r.best_value)
    mean = np.mean(finals) if all(math.isfinite(v) for v in finals) else -math.inf
    print(f"{cfg.property} {policy.name}: runs={len(results)} trials={cfg.trials} "
          f"mean r_max={mean:.6g} best={best.best_value:.6g} {best.best_smiles}")
    return 0


def run_command(cfg: RunConfig) -> int:
    try:
        if cfg.command == "oracle-eval":
            value = oracle_value(OracleKind.parse(cfg.kind), ArmSpec(cfg.mu, cfg.sigma), cfg.r_max)
            print(repr(value))
            return 0
        if cfg.command == "synthetic":
            return _run_synthetic(cfg)
        return _run_molsearch(cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run_command(parse_config(argv))


if __name__ == "__main__":
    sys.exit(main())
