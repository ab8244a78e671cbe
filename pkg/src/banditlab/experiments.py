"""Synthetic max-bandit benchmarks, the replication driver and aggregation."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import ArmSpec, OracleKind, PullRecord, SufficientStats, best_arms
from .policies import choose_arms

__all__ = [
    "ProblemSpec",
    "PROBLEMS",
    "RunSummary",
    "LogLinearFit",
    "log_checkpoints",
    "derive_seed",
    "simulate",
    "run_episode",
    "run_many",
    "aggregate",
    "fit_loglinear",
    "emit_csv",
    "read_csv",
    "emit_summary_csv",
]

RUN_FIELDS = ["run_id", "seed", "t", "r_max", "failures"]
SUMMARY_FIELDS = ["t", "metric", "mean", "stderr"]

# Replications are simulated in fixed-size lockstep batches. The batch size
# must not depend on the worker count, or float results could differ.
BATCH_SIZE = 100


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    arms: tuple[ArmSpec, ...]
    horizon: int = 10_000
    failure_oracle: OracleKind = OracleKind.EXPECTED_IMPROVEMENT

    def __post_init__(self):
        if not self.arms:
            raise ValueError("a problem needs at least one arm")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @classmethod
    def gaussian(cls, name, params, **kwargs):
        """Build from a flat ``(mu_1, sigma_1, mu_2, sigma_2, ...)`` tuple."""
        arms = tuple(ArmSpec(m, s) for m, s in zip(params[::2], params[1::2]))
        return cls(name, arms, **kwargs)

    def with_horizon(self, horizon: int) -> "ProblemSpec":
        return ProblemSpec(self.name, self.arms, horizon, self.failure_oracle)


PROBLEMS = {
    "easy": ProblemSpec.gaussian("easy", (1, 1, 0, 2, -1, 3)),
    "difficult": ProblemSpec.gaussian("difficult", (-0.2, 1.1, 0, 1, -0.8, 1.2)),
    "unfavorable": ProblemSpec.gaussian("unfavorable", (1, 1, 0, 1, -1, 1)),
}


@dataclass
class RunSummary:
    """Checkpointed trajectory of one replication.

    ``arms``/``rewards``/``oracle_best`` hold the full per-round history and
    are only filled when the simulation was asked to keep it.
    """

    run_id: int
    seed: int
    t: np.ndarray
    r_max: np.ndarray
    failures: np.ndarray
    arms: np.ndarray | None = field(default=None, repr=False)
    rewards: np.ndarray | None = field(default=None, repr=False)
    oracle_best: np.ndarray | None = field(default=None, repr=False)

    def history(self) -> list[PullRecord]:
        if self.arms is None:
            raise ValueError("run was simulated without keep_history=True")
        return [
            PullRecord(i + 1, int(k), float(r), int(b))
            for i, (k, r, b) in enumerate(zip(self.arms, self.rewards, self.oracle_best))
        ]


def log_checkpoints(horizon: int, n: int = 40) -> np.ndarray:
    """``min(n, horizon)`` distinct, roughly log-spaced rounds in ``[1, horizon]``."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    want = min(n, horizon)
    m = want
    while True:
        grid = np.unique(np.rint(np.geomspace(1, horizon, m)).astype(np.int64))
        if len(grid) >= want:
            break
        m += 1
    if len(grid) > want:
        # Drop surplus points from the dense low end, keep 1 and horizon.
        keep = np.concatenate([[0], np.arange(len(grid) - want + 1, len(grid))])
        grid = grid[keep]
    return grid


def derive_seed(master_seed: int, run_id: int) -> int:
    """Per-run seed from the master seed and run counter."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(run_id),))
    return int(ss.generate_state(1, np.uint64)[0])


def _streams(seeds, n_arms, horizon):
    normals = np.empty((len(seeds), n_arms, horizon))
    uniforms = np.empty((len(seeds), horizon))
    for i, seed in enumerate(seeds):
        rng = np.random.Generator(np.random.Philox(seed))
        normals[i] = rng.standard_normal((n_arms, horizon))
        uniforms[i] = rng.random(horizon)
    return normals, uniforms


def simulate(problem: ProblemSpec, policy, seeds: Sequence[int], checkpoints=None,
             keep_history: bool = False, run_ids: Sequence[int] | None = None) -> list[RunSummary]:
    """Play ``problem`` with ``policy`` once per seed, all runs in lockstep.

    Each run draws its own reward stream: the ``n``-th pull of arm ``k`` uses
    the ``n``-th standard normal of that arm's stream, so a run's trajectory
    depends only on its seed. Failures are judged against the oracle-best arm
    under the true parameters and the run's realised running maximum.
    """
    T = problem.horizon
    K = len(problem.arms)
    if T < K * policy.init_pulls:
        raise ValueError(f"horizon {T} shorter than initialisation ({K} x {policy.init_pulls})")
    seeds = [int(s) for s in seeds]
    R = len(seeds)
    run_ids = list(range(R)) if run_ids is None else list(run_ids)
    checkpoints = log_checkpoints(T) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if checkpoints.size and (checkpoints.min() < 1 or checkpoints.max() > T):
        raise ValueError("checkpoints must lie in [1, horizon]")

    mu = np.array([a.mu for a in problem.arms])
    sigma = np.array([a.sigma for a in problem.arms])
    normals, uniforms = _streams(seeds, K, T)
    stats = SufficientStats(K, R)
    rows = np.arange(R)
    failures = np.zeros(R, dtype=np.int64)
    cp_index = {int(c): i for i, c in enumerate(checkpoints)}
    cp_rmax = np.empty((R, len(checkpoints)))
    cp_fail = np.empty((R, len(checkpoints)), dtype=np.int64)
    if keep_history:
        h_arm = np.empty((R, T), dtype=np.int64)
        h_rew = np.empty((R, T))
        h_best = np.empty((R, T), dtype=np.int64)

    for t in range(1, T + 1):
        k = choose_arms(policy, stats, uniforms[:, t - 1]).chosen
        best = best_arms(problem.failure_oracle, mu, sigma, stats.r_max)
        failures += k != best
        reward = mu[k] + sigma[k] * normals[rows, k, stats.count[rows, k]]
        stats.observe(k, reward)
        if keep_history:
            h_arm[:, t - 1] = k
            h_rew[:, t - 1] = reward
            h_best[:, t - 1] = best
        j = cp_index.get(t)
        if j is not None:
            cp_rmax[:, j] = stats.r_max
            cp_fail[:, j] = failures

    out = []
    for i in range(R):
        s = RunSummary(run_ids[i], seeds[i], checkpoints.copy(), cp_rmax[i].copy(), cp_fail[i].copy())
        if keep_history:
            s.arms, s.rewards, s.oracle_best = h_arm[i], h_rew[i], h_best[i]
        out.append(s)
    return out


def run_episode(problem: ProblemSpec, policy, seed: int, checkpoints=None,
                keep_history: bool = False) -> RunSummary:
    return simulate(problem, policy, [seed], checkpoints, keep_history)[0]


def _simulate_batch(args):
    problem, policy, seeds, run_ids, checkpoints = args
    return simulate(problem, policy, seeds, checkpoints, run_ids=run_ids)


def run_many(problem: ProblemSpec, policy, n_runs: int, master_seed: int,
             checkpoints=None, workers: int = 1) -> list[RunSummary]:
    """``n_runs`` independent replications with seeds derived from ``master_seed``.

    Output is identical for any ``workers`` value.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    ids = list(range(n_runs))
    jobs = [
        (problem, policy, [derive_seed(master_seed, i) for i in ids[a:a + BATCH_SIZE]],
         ids[a:a + BATCH_SIZE], checkpoints)
        for a in range(0, n_runs, BATCH_SIZE)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_simulate_batch, jobs))
    else:
        batches = [_simulate_batch(j) for j in jobs]
    return [s for batch in batches for s in batch]


def aggregate(runs: Sequence[RunSummary]) -> list[tuple[int, str, float, float]]:
    """Per-checkpoint mean and standard error (``std(ddof=1)/sqrt(R)``) of
    ``r_max`` and ``failures``, as ``(t, metric, mean, stderr)`` rows."""
    if len(runs) < 2:
        raise ValueError("aggregation needs at least two runs")
    grid = runs[0].t
    for r in runs[1:]:
        if not np.array_equal(r.t, grid):
            raise ValueError(f"run {r.run_id} has a different checkpoint grid")
    rows = []
    n = len(runs)
    for metric in ("r_max", "failures"):
        data = np.array([getattr(r, metric) for r in runs], dtype=float)
        mean = data.mean(axis=0)
        se = data.std(axis=0, ddof=1) / math.sqrt(n)
        rows.extend((int(t), metric, float(m), float(s)) for t, m, s in zip(grid, mean, se))
    return rows


# Fits below this R^2 are reported as not log-linear.
LOG_LINEAR_R2 = 0.95


class LogLinearFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float

    @property
    def log_linear(self) -> bool:
        return self.r_squared >= LOG_LINEAR_R2


def fit_loglinear(points) -> LogLinearFit:
    """Least-squares fit of ``N = slope*ln(t) + intercept``.

    ``r_squared`` is defined as 0 when ``N`` has no variance.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (t, N) points")
    t, y = pts[:, 0], pts[:, 1]
    if np.any(t <= 1) or len(np.unique(t)) < 3:
        raise ValueError("t values must be distinct and > 1")
    x = np.log(t)
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return LogLinearFit(0.0, float(y.mean()), 0.0)
    resid = y - (slope * x + intercept)
    return LogLinearFit(float(slope), float(intercept), 1.0 - float(np.sum(resid ** 2)) / ss_tot)


def _open_for_write(path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(summaries: Sequence[RunSummary], path) -> None:
    """One row per (run, checkpoint): ``run_id,seed,t,r_max,failures``."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_FIELDS)
        for s in summaries:
            for t, rm, f in zip(s.t, s.r_max, s.failures):
                w.writerow([s.run_id, s.seed, int(t), repr(float(rm)), int(f)])


def read_csv(path) -> list[RunSummary]:
    runs: dict[int, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RUN_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(RUN_FIELDS)}")
        for row in reader:
            rid = int(row["run_id"])
            d = runs.setdefault(rid, {"seed": int(row["seed"]), "t": [], "r_max": [], "failures": []})
            d["t"].append(int(row["t"]))
            d["r_max"].append(float(row["r_max"]))
            d["failures"].append(int(row["failures"]))
    return [
        RunSummary(rid, d["seed"], np.array(d["t"], dtype=np.int64), np.array(d["r_max"]),
                   np.array(d["failures"], dtype=np.int64))
        for rid, d in runs.items()
    ]


def emit_summary_csv(rows, path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for t, metric, mean, se in rows:
            w.writerow([t, metric, repr(mean), repr(se)])
