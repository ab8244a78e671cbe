"""Joback group classification and group-contribution property estimates."""

from __future__ import annotations

import csv
import enum
import math
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .graph import MolecularGraph

__all__ = [
    "GROUP_LABELS",
    "POLAR_LABELS",
    "Property",
    "PropertyModel",
    "UnclassifiableMolecule",
    "MissingCoefficient",
    "classify_groups",
    "polar_fragments",
    "estimate_property",
    "load_property_model",
    "data_dir",
]

GROUP_LABELS = (
    "-CH3", ">CH2", ">CH-", ">C<", "=CH2", "=CH-", "=C<", "F", "Cl", "Br",
    "-OH", "-O-", ">C=O", "-CHO", "-COO-", "-COOH", "-NH2", ">NH", ">N-",
)
POLAR_LABELS = ("-O-", "[OH]-", "O=", ">N-", "-[NH]-", "[NH2]-")

JOBACK_FILE = "joback_groups.csv"
TPSA_FILE = "tpsa_contributions.csv"
DATA_ENV = "BANDITLAB_DATA_DIR"


class UnclassifiableMolecule(ValueError):
    """No group decomposition exists (bare methane is the known case)."""


class MissingCoefficient(ValueError):
    """The estimate needs a coefficient the table leaves blank, or the
    correlation is outside its domain."""


def classify_groups(graph: MolecularGraph) -> Counter:
    """Map every heavy atom to exactly one Joback group.

    Carbonyl carbons are clustered first, in atom order, each claiming its
    double-bonded O and at most one unclaimed single-bonded O (a hydroxyl in
    preference, giving -COOH, otherwise an ether O, giving -COO-). Carbonyls
    carrying H become -CHO.
    """
    n = graph.heavy_atom_count
    used = [False] * n
    groups: Counter = Counter()
    el, hs = graph.elements, graph.h_counts

    for i in range(n):
        if el[i] != "C":
            continue
        nbrs = graph.neighbors(i)
        oxo = next((j for j, o in nbrs if o == 2 and el[j] == "O"), None)
        if oxo is None:
            continue
        single_o = [j for j, o in nbrs if o == 1 and el[j] == "O" and not used[j]]
        hydroxyl = [j for j in single_o if hs[j] == 1]
        used[i] = used[oxo] = True
        if hydroxyl:
            used[hydroxyl[0]] = True
            groups["-COOH"] += 1
        elif single_o:
            used[single_o[0]] = True
            groups["-COO-"] += 1
        elif hs[i] >= 1:
            groups["-CHO"] += 1
        else:
            groups[">C=O"] += 1

    for i in range(n):
        if used[i]:
            continue
        e, h = el[i], hs[i]
        label = None
        if e == "C":
            if any(o == 2 for _, o in graph.neighbors(i)):
                label = {2: "=CH2", 1: "=CH-", 0: "=C<"}.get(h)
            else:
                label = {3: "-CH3", 2: ">CH2", 1: ">CH-", 0: ">C<"}.get(h)
        elif e == "O":
            label = {1: "-OH", 0: "-O-"}.get(h)
        elif e == "N":
            label = {2: "-NH2", 1: ">NH", 0: ">N-"}.get(h)
        elif e in ("F", "Cl", "Br"):
            label = e
        if label is None:
            raise UnclassifiableMolecule(f"atom {i} ({e} with {h} H) has no group")
        groups[label] += 1
    return groups


def polar_fragments(graph: MolecularGraph) -> Counter:
    """Polar-atom fragment labels for the surface-area sum."""
    out: Counter = Counter()
    for i, e in enumerate(graph.elements):
        h = graph.h_counts[i]
        if e == "O":
            if any(o == 2 for _, o in graph.neighbors(i)):
                out["O="] += 1
            else:
                out["[OH]-" if h == 1 else "-O-"] += 1
        elif e == "N":
            out[{0: ">N-", 1: "-[NH]-", 2: "[NH2]-"}[h]] += 1
    return out


class Property(enum.Enum):
    TB = "tb"
    PC = "pc"
    ETA = "eta"
    TPSA = "tpsa"


@dataclass(frozen=True)
class PropertyModel:
    """One target property with its coefficient table.

    ``coefficients`` maps a group (or polar fragment) label to the
    coefficient(s) used; blank table cells are stored as NaN.
    """

    property: Property
    coefficients: dict
    viscosity_temperature: float = 300.0

    def __call__(self, graph: MolecularGraph) -> float:
        """Property value of a molecule; raises for unclassifiable ones."""
        groups = classify_groups(graph)
        if self.property is Property.TPSA:
            return estimate_property(polar_fragments(graph), self)
        return estimate_property(groups, self, graph.atom_count, graph.molecular_weight)


def estimate_property(groups, model: PropertyModel, atom_count: int | None = None,
                      molecular_weight: float | None = None) -> float:
    """Group-contribution estimate.

    Tb [K] = 198.2 + sum dTb; Pc [bar] = (0.113 + 0.0032 n_atoms - sum dPc)^-2;
    eta [Pa s] = Mw exp((sum eta_a - 597.82)/T + sum eta_b - 11.202);
    TPSA [A^2] = sum of fragment contributions.
    """
    coef = model.coefficients
    missing = [g for g in groups if g not in coef]
    if missing:
        raise MissingCoefficient(f"no coefficient row for {', '.join(sorted(missing))}")

    def total(column):
        s = 0.0
        for g, count in groups.items():
            v = coef[g][column]
            if math.isnan(v):
                raise MissingCoefficient(f"group {g} has no {column} coefficient")
            s += count * v
        return s

    prop = model.property
    if prop is Property.TB:
        return 198.2 + total("dTb")
    if prop is Property.PC:
        if atom_count is None:
            raise ValueError("critical pressure needs the total atom count")
        base = 0.113 + 0.0032 * atom_count - total("dPc")
        if base <= 0:
            raise MissingCoefficient("critical-pressure correlation has a non-positive base")
        return base ** -2
    if prop is Property.ETA:
        if molecular_weight is None:
            raise ValueError("viscosity needs the molecular weight")
        a, b = total("eta_a"), total("eta_b")
        return molecular_weight * math.exp((a - 597.82) / model.viscosity_temperature + b - 11.202)
    return total("contribution_A2")


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else Path(__file__).with_name("data")


def _read_table(path: Path, key: str, expected: tuple[str, ...]) -> dict:
    if not path.is_file():
        raise FileNotFoundError(f"coefficient table not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    table = {}
    for row in rows:
        label = row.pop(key)
        table[label] = {k: float(v) if v.strip() else math.nan for k, v in row.items()}
    absent = [g for g in expected if g not in table]
    if absent:
        raise ValueError(f"{path}: missing rows for {', '.join(absent)}")
    return table


def load_property_model(prop, directory=None, viscosity_temperature: float = 300.0) -> PropertyModel:
    """Load the coefficient table for ``prop`` (a :class:`Property` or its name)."""
    prop = Property(prop.lower()) if isinstance(prop, str) else prop
    if viscosity_temperature <= 0:
        raise ValueError("viscosity temperature must be positive kelvin")
    root = Path(directory) if directory is not None else data_dir()
    if prop is Property.TPSA:
        table = _read_table(root / TPSA_FILE, "pattern_label", POLAR_LABELS)
    else:
        table = _read_table(root / JOBACK_FILE, "group", GROUP_LABELS)
    return PropertyModel(prop, table, viscosity_temperature)
