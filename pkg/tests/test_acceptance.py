"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected by ``conftest.py`` and printed in the terminal
summary. Run just this file with ``pytest tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from banditlab.cli import main
from banditlab.core import ArmSpec, OracleKind, SufficientStats, oracle_value
from banditlab.experiments import PROBLEMS, fit_loglinear, run_many
from banditlab.molecules import (DerivationState, Property, build_graph,
                                 classify_groups, flat_random_search,
                                 load_property_model, mcts_search,
                                 random_rollout, render_smiles)
from banditlab.policies import PIUCB, ClassicalUCB, MaxSearchGaussian, piucb_index
from banditlab.special import chi_square_quantile, erfc, ierfc, student_t_quantile
from oracles import bisect, chi2_cdf, erfc_quad, ierfc_quad, t_cdf
from test_grammar import balanced

SQRT2 = math.sqrt(2)
RUNS = 100
MASTER_SEED = 2024
POLICIES = {
    "UCB": ClassicalUCB(SQRT2),
    "MaxSearch": MaxSearchGaussian(SQRT2, SQRT2),
    "PIUCB1": PIUCB(SQRT2, SQRT2),
    "PIUCB2": PIUCB(0.5, SQRT2),
}


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def test_c1_oracle_desk_check(acceptance):
    a, b = ArmSpec(0, 1), ArmSpec(-1, 2)
    EI, PI = OracleKind.EXPECTED_IMPROVEMENT, OracleKind.PROBABILITY_OF_IMPROVEMENT
    got = [oracle_value(EI, a, 0.5), oracle_value(EI, b, 0.5), oracle_value(PI, a, 0.5), oracle_value(PI, b, 0.5)]
    want = [0.198, 0.262, 0.309, 0.227]
    ok = all(abs(g - w) <= 0.002 for g, w in zip(got, want))
    acceptance(1, "oracle desk-check", ok, " ".join(f"{g:.4f}" for g in got))
    assert ok


def test_c2_special_function_accuracy(acceptance):
    def run():
        grid = np.linspace(-6, 6, 1000)
        err_erfc = max(abs(erfc(x) - erfc_quad(x)) for x in grid)
        err_ierfc = max(abs(ierfc(x) - ierfc_quad(x)) for x in grid)
        ps = np.linspace(0.01, 0.99, 99)
        err_q = 0.0
        for n in range(1, 51):
            tq = student_t_quantile(ps, n)
            cq = chi_square_quantile(ps, n)
            for p, a, c in zip(ps, tq, cq):
                err_q = max(err_q, abs(t_cdf(a, n) - p), abs(chi2_cdf(c, n) - p))
        return err_erfc, err_ierfc, err_q

    (e1, e2, e3), secs = timed(run)
    ok = e1 <= 1e-10 and e2 <= 1e-10 and e3 <= 1e-6 and secs < 10
    acceptance(2, "special-function accuracy", ok,
               f"erfc {e1:.1e}, ierfc {e2:.1e}, quantile round trip {e3:.1e}, {secs:.1f}s")
    assert ok


def mean_final(runs, field):
    return float(np.mean([getattr(r, field)[-1] for r in runs]))


@pytest.mark.slow
def test_c3_unfavorable_ucb(acceptance):
    runs, secs = timed(lambda: run_many(PROBLEMS["unfavorable"], POLICIES["UCB"], RUNS, MASTER_SEED))
    n = mean_final(runs, "failures")
    ok = n < 60 and secs < 60
    acceptance(3, "unfavorable problem, classical UCB", ok, f"mean N(T) = {n:.1f} (< 60), {secs:.0f}s")
    assert ok


@pytest.mark.slow
def test_c4_easy_ordering(acceptance):
    start = time.perf_counter()
    runs = {k: run_many(PROBLEMS["easy"], p, RUNS, MASTER_SEED) for k, p in POLICIES.items()}
    secs = time.perf_counter() - start
    n = {k: mean_final(r, "failures") for k, r in runs.items()}
    t = runs["PIUCB2"][0].t
    curve = np.mean([r.failures for r in runs["PIUCB2"]], axis=0)
    sel = (t >= 100) & (t <= 10_000)
    fit = fit_loglinear(np.column_stack([t[sel], curve[sel]]))
    ok = (n["MaxSearch"] < n["PIUCB1"] and n["PIUCB2"] < n["PIUCB1"]
          and all(n[k] < 0.5 * n["UCB"] for k in ("MaxSearch", "PIUCB1", "PIUCB2"))
          and fit.r_squared >= 0.95 and secs < 300)
    detail = ", ".join(f"{k} {v:.1f}" for k, v in n.items())
    acceptance(4, "easy problem ordering", ok, f"mean N(T): {detail}; PIUCB2 R^2 = {fit.r_squared:.3f}, {secs:.0f}s")
    assert ok


@pytest.mark.slow
def test_c5_difficult_rmax(acceptance):
    start = time.perf_counter()
    r = {k: mean_final(run_many(PROBLEMS["difficult"], p, RUNS, MASTER_SEED), "r_max") for k, p in POLICIES.items()}
    secs = time.perf_counter() - start
    ok = all(r[k] >= r["UCB"] for k in ("MaxSearch", "PIUCB1", "PIUCB2")) and secs < 300
    detail = ", ".join(f"{k} {v:.3f}" for k, v in r.items())
    acceptance(5, "difficult problem r_max", ok, f"mean r_max(T): {detail}, {secs:.0f}s")
    assert ok


def test_c6_piucb_unit(acceptance):
    s = SufficientStats.from_rewards([[0.0, 1.0]])
    s.t = 10
    z = float(piucb_index(s, SQRT2, SQRT2, r_max=1.0)[0, 0])
    # hand evaluation with quantiles inverted from quadrature CDFs
    tq = bisect(lambda q: t_cdf(q, 1), 0.95, -100, 100)
    cq = bisect(lambda q: chi2_cdf(q, 1), 0.05, 1e-12, 10)
    hand = (0.5 + math.sqrt(0.5) * tq / SQRT2 - 1) / math.sqrt(0.5 / cq)
    ok = abs(z - 0.2356) <= 1e-3 and abs(z - hand) <= 1e-9
    acceptance(6, "PIUCB worked state", ok, f"index {z:.5f}, hand evaluation {hand:.5f}")
    assert ok


def test_c7_generation_soundness(acceptance):
    def run():
        rng = np.random.default_rng(7)
        bad, methane = [], 0
        for i in range(10_000):
            s = random_rollout(DerivationState.start(6), rng)
            smi = render_smiles(s)
            g = build_graph(s)
            if not (s.complete and balanced(smi) and g.valence_ok()):
                bad.append(i)
                continue
            if g.elements == ["C"] and g.h_counts == [4]:
                methane += 1
                continue
            try:
                classify_groups(g)
            except ValueError:
                bad.append(i)
        return bad, methane

    (bad, methane), secs = timed(run)
    ok = not bad and secs < 60
    acceptance(7, "molecule generation soundness", ok,
               f"{10_000 - len(bad)}/10000 sound ({methane} methane sentinels), {secs:.0f}s")
    assert ok


@pytest.mark.slow
def test_c8_molecule_search(acceptance):
    model = load_property_model(Property.TB)
    start = time.perf_counter()
    tree = [mcts_search(model, POLICIES["PIUCB2"], 3000, seed=s).best_value for s in range(20)]
    flat = [flat_random_search(model, 3000, seed=s).best_value for s in range(20)]
    secs = time.perf_counter() - start
    ok = np.mean(tree) >= np.mean(flat) and secs < 600
    acceptance(8, "molecule search sanity", ok,
               f"mean best T_b: MCTS PIUCB2 {np.mean(tree):.1f} K vs flat random {np.mean(flat):.1f} K, {secs:.0f}s")
    assert ok


def test_c9_reproducibility(acceptance, tmp_path, capsys):
    commands = {
        "synthetic": ["synthetic", "--problem", "difficult", "--runs", "150", "--horizon", "600", "--seed", "5"],
        "molsearch": ["molsearch", "--property", "tpsa", "--runs", "3", "--trials", "150", "--seed", "5"],
    }
    same = {}
    for name, argv in commands.items():
        blobs = []
        for i, threads in enumerate(("1", "1", "2")):
            out = tmp_path / f"{name}{i}.csv"
            assert main([*argv, "--threads", threads, "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same[name] = len(set(blobs)) == 1
    capsys.readouterr()
    ok = all(same.values())
    acceptance(9, "reproducibility", ok,
               ", ".join(f"{k} {'identical' if v else 'DIFFERS'} across 2 x 1 thread and 2 threads"
                         for k, v in same.items()))
    assert ok
