"""Heavy-atom graph read directly off a grammar derivation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Atom, DerivationState, expand

__all__ = ["MolecularGraph", "build_graph", "VALENCE", "ATOMIC_MASS"]

VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1, "Cl": 1, "Br": 1}
ATOMIC_MASS = {
    "H": 1.008, "C": 12.011, "N": 14.007, "O": 15.999,
    "F": 18.998, "Cl": 35.45, "Br": 79.904,
}


@dataclass
class MolecularGraph:
    elements: list[str] = field(default_factory=list)
    h_counts: list[int] = field(default_factory=list)
    bonds: list[tuple[int, int, int]] = field(default_factory=list)

    def __post_init__(self):
        self._adj = None

    def add_atom(self, element: str) -> int:
        self.elements.append(element)
        self.h_counts.append(0)
        self._adj = None
        return len(self.elements) - 1

    def add_bond(self, i: int, j: int, order: int) -> None:
        self.bonds.append((i, j, order))
        self._adj = None

    def neighbors(self, i: int) -> list[tuple[int, int]]:
        """``(atom, bond_order)`` pairs bonded to heavy atom ``i``."""
        if self._adj is None:
            adj = [[] for _ in self.elements]
            for a, b, o in self.bonds:
                adj[a].append((b, o))
                adj[b].append((a, o))
            self._adj = adj
        return self._adj[i]

    def bond_order_sum(self, i: int) -> int:
        return sum(o for _, o in self.neighbors(i))

    def valence_ok(self) -> bool:
        return all(
            self.bond_order_sum(i) + self.h_counts[i] == VALENCE[e]
            for i, e in enumerate(self.elements)
        )

    @property
    def heavy_atom_count(self) -> int:
        return len(self.elements)

    @property
    def atom_count(self) -> int:
        """All atoms, hydrogens included."""
        return len(self.elements) + sum(self.h_counts)

    @property
    def molecular_weight(self) -> float:
        return sum(ATOMIC_MASS[e] for e in self.elements) + ATOMIC_MASS["H"] * sum(self.h_counts)


def build_graph(state: DerivationState) -> MolecularGraph:
    if not state.complete:
        raise ValueError("cannot build a graph from an incomplete derivation")
    return graph_from_sequence(state.sequence)


def graph_from_sequence(sequence) -> MolecularGraph:
    g = MolecularGraph()

    def walk(atom: Atom) -> int:
        i = g.add_atom(atom.element)
        for order, child in atom.branches:
            if child.element == "H":
                g.h_counts[i] += 1
            else:
                g.add_bond(i, walk(child), order)
        return i

    root = expand(sequence)
    walk(root)
    return g
