"""Monte Carlo tree search over grammar derivations with a bandit selection index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SufficientStats
from ..policies import argmax_random_tie
from .grammar import (DEFAULT_DEPTH_CAP, DerivationState, apply_production,
                      legal_productions, random_rollout, render_smiles)
from .graph import graph_from_sequence
from .properties import MissingCoefficient, PropertyModel, UnclassifiableMolecule

__all__ = ["SearchResult", "mcts_search", "flat_random_search", "MoleculeScorer"]


@dataclass
class SearchResult:
    best_smiles: str
    best_value: float
    r_max: np.ndarray
    """Running maximum after each trial (``-inf`` until a scorable molecule)."""
    best_per_trial: list
    """Best SMILES so far after each trial (empty string until one exists)."""


class MoleculeScorer:
    """Property value per complete derivation, memoised.

    Molecules the model cannot score (methane, or a group without the
    needed coefficient) yield ``None``.
    """

    def __init__(self, model: PropertyModel):
        self.model = model
        self._cache: dict = {}

    def __call__(self, state: DerivationState):
        key = state.sequence
        if key not in self._cache:
            try:
                value = self.model(graph_from_sequence(key))
            except (UnclassifiableMolecule, MissingCoefficient):
                value = None
            self._cache[key] = value
        return self._cache[key]


class _Node:
    __slots__ = ("state", "productions", "children", "stats", "visits")

    def __init__(self, state: DerivationState):
        self.state = state
        self.productions = () if state.complete else legal_productions(state)
        self.children: dict = {}
        if self.productions:
            self.stats = SufficientStats(len(self.productions))
            self.visits = np.zeros(len(self.productions), dtype=np.int64)


def _select(node: _Node, policy, r_max: float, rng) -> int:
    init = policy.init_pulls
    values = policy.indices(node.stats, r_max=r_max)[0]
    if init:
        values = np.where(node.stats.count[0] < init, -np.inf, values)
        values = np.where(node.visits < init, np.inf, values)
    chosen, _ = argmax_random_tie(values[None, :], np.array([rng.random()]))
    return int(chosen[0])


class _Tracker:
    def __init__(self):
        self.r_max = -math.inf
        self.best_smiles = ""
        self.trajectory = []
        self.best = []

    def record(self, state, value):
        if value is not None and value > self.r_max:
            self.r_max = value
            self.best_smiles = render_smiles(state)
        self.trajectory.append(self.r_max)
        self.best.append(self.best_smiles)

    def result(self):
        return SearchResult(self.best_smiles, self.r_max, np.array(self.trajectory), self.best)


def mcts_search(model: PropertyModel, policy, trials: int, seed: int,
                depth_cap: int = DEFAULT_DEPTH_CAP) -> SearchResult:
    """Maximise ``model`` over grammar molecules, one molecule per trial.

    Each node keeps statistics of the rewards that passed through each of
    its children, and the bandit index is evaluated against the global
    running maximum. Children with fewer than ``policy.init_pulls`` visits
    are forced (index +inf); children that were visited but never scored
    often enough fall to -inf. Unscorable molecules count as visits but not
    as rewards.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    score = MoleculeScorer(model)
    root = _Node(DerivationState.start(depth_cap))
    track = _Tracker()

    for _ in range(trials):
        node = root
        path = []
        while not node.state.complete:
            pos = _select(node, policy, track.r_max, rng)
            path.append((node, pos))
            pid = node.productions[pos]
            child = node.children.get(pid)
            if child is None:
                child = node.children[pid] = _Node(apply_production(node.state, pid))
                node = child
                break
            node = child
        final = random_rollout(node.state, rng)
        value = score(final)
        track.record(final, value)
        for n, pos in path:
            n.visits[pos] += 1
            if value is not None:
                n.stats.observe(pos, value)
    return track.result()


def flat_random_search(model: PropertyModel, trials: int, seed: int,
                       depth_cap: int = DEFAULT_DEPTH_CAP) -> SearchResult:
    """Independent uniform-random derivations; the no-tree baseline."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    score = MoleculeScorer(model)
    start = DerivationState.start(depth_cap)
    track = _Tracker()
    for _ in range(trials):
        final = random_rollout(start, rng)
        track.record(final, score(final))
    return track.result()
