"""Context-free fragment grammar for acyclic SMILES and its derivation states.

Productions are numbered globally (0..21) in rule-table order. A derivation
is leftmost: the first pending slot is always the one rewritten next.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "RULES",
    "Production",
    "PRODUCTIONS",
    "DerivationState",
    "legal_productions",
    "apply_production",
    "random_rollout",
    "render_smiles",
    "expand",
    "Atom",
    "DEFAULT_DEPTH_CAP",
]

DEFAULT_DEPTH_CAP = 6

RULES: dict[str, tuple[str, ...]] = {
    "S": (
        "C(X)(Y)(Y)(Y)",
        "C(=O)(Y)(Y)",
        "C(Y)(Y)(=C(Y)(Y))",
        "C(=O)(O(Y))(Y)",
    ),
    "X": (
        "[H]", "F", "Cl", "Br",
        "C(X)(Y)(Y)",
        "O(Y)",
        "N(Y)(Y)",
        "C(=O)(Y)",
        "C(Y)(=C(Y)(Y))",
        "C(=O)(O(Y))",
    ),
    "Y": (
        "[H]", "F", "Cl", "Br",
        "C(X)(Y)(Y)",
        "C(=O)(Y)",
        "C(Y)(=C(Y)(Y))",
        "C(=O)(O(Y))",
    ),
}

NONTERMINALS = ("S", "X", "Y")
_TOKENS = ("[H]", "Cl", "Br", "C", "O", "N", "F", "X", "Y")


@dataclass
class Atom:
    """Template or expanded atom; ``branches`` holds ``(bond_order, Atom)``.

    In a template, an atom whose ``element`` is a nonterminal is a slot.
    """

    element: str
    branches: list

    def slots(self) -> Iterator[str]:
        if self.element in NONTERMINALS:
            yield self.element
        for _, child in self.branches:
            yield from child.slots()


def _parse_template(text: str) -> Atom:
    pos = 0

    def atom():
        nonlocal pos
        for tok in _TOKENS:
            if text.startswith(tok, pos):
                pos += len(tok)
                break
        else:
            raise ValueError(f"bad template {text!r} at {pos}")
        node = Atom("H" if tok == "[H]" else tok, [])
        while pos < len(text) and text[pos] == "(":
            pos += 1
            order = 1
            if text[pos] == "=":
                order = 2
                pos += 1
            node.branches.append((order, atom()))
            if text[pos] != ")":
                raise ValueError(f"unbalanced template {text!r}")
            pos += 1
        return node

    root = atom()
    if pos != len(text):
        raise ValueError(f"trailing characters in template {text!r}")
    return root


@dataclass(frozen=True)
class Production:
    id: int
    lhs: str
    rhs: str
    template: Atom
    slots: tuple[str, ...]

    @property
    def terminal(self) -> bool:
        return not self.slots


def _build_productions():
    out = []
    for lhs in NONTERMINALS:
        for rhs in RULES[lhs]:
            tpl = _parse_template(rhs)
            out.append(Production(len(out), lhs, rhs, tpl, tuple(tpl.slots())))
    return tuple(out)


PRODUCTIONS: tuple[Production, ...] = _build_productions()
_BY_LHS = {nt: tuple(p.id for p in PRODUCTIONS if p.lhs == nt) for nt in NONTERMINALS}
_TERMINAL_BY_LHS = {nt: tuple(i for i in _BY_LHS[nt] if PRODUCTIONS[i].terminal) for nt in NONTERMINALS}


@dataclass(frozen=True)
class DerivationState:
    """Leftmost derivation so far.

    ``sequence`` lists the applied production ids; ``pending`` the open slots
    as ``(nonterminal, depth)``, leftmost first.
    """

    sequence: tuple[int, ...] = ()
    pending: tuple[tuple[str, int], ...] = (("S", 0),)
    depth_cap: int = DEFAULT_DEPTH_CAP

    @classmethod
    def start(cls, depth_cap: int = DEFAULT_DEPTH_CAP) -> "DerivationState":
        if depth_cap < 1:
            raise ValueError("depth cap must be >= 1")
        return cls((), (("S", 0),), depth_cap)

    @property
    def complete(self) -> bool:
        return not self.pending


def legal_productions(state: DerivationState) -> tuple[int, ...]:
    """Production ids applicable to the leftmost pending slot.

    At the depth cap only slot-free productions are offered.
    """
    if state.complete:
        raise ValueError("derivation is already complete")
    nt, depth = state.pending[0]
    if depth >= state.depth_cap:
        return _TERMINAL_BY_LHS[nt]
    return _BY_LHS[nt]


def apply_production(state: DerivationState, production_id: int) -> DerivationState:
    if production_id not in legal_productions(state):
        nt, depth = state.pending[0]
        raise ValueError(f"production {production_id} is not legal for slot {nt} at depth {depth}")
    depth = state.pending[0][1] + 1
    new = tuple((nt, depth) for nt in PRODUCTIONS[production_id].slots)
    return DerivationState(state.sequence + (production_id,), new + state.pending[1:], state.depth_cap)


def random_rollout(state: DerivationState, rng: np.random.Generator) -> DerivationState:
    """Complete ``state`` with uniformly random legal productions."""
    seq = list(state.sequence)
    pending = list(state.pending)
    cap = state.depth_cap
    while pending:
        nt, depth = pending.pop(0)
        options = _TERMINAL_BY_LHS[nt] if depth >= cap else _BY_LHS[nt]
        pid = options[int(rng.integers(len(options)))]
        seq.append(pid)
        pending[0:0] = [(s, depth + 1) for s in PRODUCTIONS[pid].slots]
    return DerivationState(tuple(seq), (), cap)


def expand(sequence) -> Atom:
    """Concrete atom tree (explicit H atoms) of a complete production sequence."""
    it = iter(sequence)

    def fill(tpl: Atom) -> Atom:
        if tpl.element in NONTERMINALS:
            return fill(PRODUCTIONS[next(it)].template)
        return Atom(tpl.element, [(o, fill(c)) for o, c in tpl.branches])

    try:
        root = fill(PRODUCTIONS[next(it)].template)
    except StopIteration:
        raise ValueError("production sequence ends before every slot is filled") from None
    if next(it, None) is not None:
        raise ValueError("production sequence has unused productions")
    return root


def _smiles(atom: Atom, out: list) -> None:
    out.append("[H]" if atom.element == "H" else atom.element)
    last = len(atom.branches) - 1
    for i, (order, child) in enumerate(atom.branches):
        if i < last:
            out.append("(")
        if order == 2:
            out.append("=")
        _smiles(child, out)
        if i < last:
            out.append(")")


def render_smiles(state: DerivationState) -> str:
    """SMILES with explicit ``[H]`` atoms; the last branch of each atom is
    written unparenthesised, e.g. ``C([H])([H])([H])[H]`` for methane."""
    if not state.complete:
        raise ValueError("cannot render an incomplete derivation")
    out: list[str] = []
    _smiles(expand(state.sequence), out)
    return "".join(out)
