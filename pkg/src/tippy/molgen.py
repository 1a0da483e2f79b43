"""Molecule toolset: name lookup, deterministic analog enumeration,
drug-likeness scoring, and candidate ranking.

Analog generation replaces a generative chemistry model with a closed-form
edit enumeration so the DMTA loop is fully reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .chem import (
    Atom,
    Bond,
    Descriptors,
    MolGraph,
    compute_descriptors,
    parse_smiles,
    to_canonical,
)


class NotFound(KeyError):
    pass


class NoValidEdits(ValueError):
    pass


class DictionaryInvalid(ValueError):
    pass


DEFAULT_DICTIONARY_PATH = Path(__file__).parent / "data" / "names.json"

# Maximum bond-order sum an aliphatic carbon may already carry and still
# accept a new single bond, or be swapped for nitrogen.
_CARBON_VALENCE = 4
_NITROGEN_VALENCE = 3


@dataclass(frozen=True)
class Provenance:
    parent: str  # parent canonical SMILES, or "seed"
    edit: str


@dataclass(frozen=True)
class Candidate:
    canonical_smiles: str
    descriptors: Descriptors
    provenance: Provenance


class NameDictionary:
    """Immutable lowercase-name -> SMILES mapping loaded from a JSON file."""

    def __init__(self, entries: dict[str, str]):
        validated: dict[str, str] = {}
        for name, smiles in entries.items():
            try:
                parse_smiles(smiles)
            except ValueError as exc:
                raise DictionaryInvalid(f"entry {name!r}: {exc}") from exc
            validated[name.lower()] = smiles
        self.entries = validated

    @classmethod
    def from_file(cls, path: str | Path) -> "NameDictionary":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in raw.items()
        ):
            raise DictionaryInvalid("dictionary file must be a JSON object of name -> SMILES")
        return cls(raw)

    @classmethod
    def default(cls) -> "NameDictionary":
        return cls.from_file(DEFAULT_DICTIONARY_PATH)

    def __len__(self) -> int:
        return len(self.entries)


def lookup_name(name: str, dictionary: NameDictionary) -> str:
    """Case-insensitive exact name lookup; raises NotFound."""
    try:
        return dictionary.entries[name.lower()]
    except KeyError:
        raise NotFound(name) from None


def _bond_order_sum(graph: MolGraph, index: int) -> int:
    return sum(bond.order for _, bond in graph.neighbors(index))


def _rebuild(atoms: list[Atom], bonds: list[Bond]) -> MolGraph:
    graph = MolGraph(
        atoms=atoms, bonds=bonds, ring_closure_count=len(bonds) - len(atoms) + 1
    )
    graph.validate()
    return graph


def _substitute(graph: MolGraph, index: int, element: str) -> MolGraph:
    atoms = [
        Atom(element, atom.aromatic, atom.index) if atom.index == index else atom
        for atom in graph.atoms
    ]
    return _rebuild(atoms, list(graph.bonds))


def _append_methyl(graph: MolGraph, index: int) -> MolGraph:
    new_index = len(graph.atoms)
    atoms = list(graph.atoms) + [Atom("C", False, new_index)]
    bonds = list(graph.bonds) + [Bond(index, new_index, 1, False)]
    return _rebuild(atoms, bonds)


def _delete_atom(graph: MolGraph, index: int) -> MolGraph:
    remap = {}
    atoms = []
    for atom in graph.atoms:
        if atom.index == index:
            continue
        remap[atom.index] = len(atoms)
        atoms.append(Atom(atom.element, atom.aromatic, len(atoms)))
    bonds = [
        Bond(remap[b.a], remap[b.b], b.order, b.aromatic)
        for b in graph.bonds
        if b.a != index and b.b != index
    ]
    return _rebuild(atoms, bonds)


def _is_terminal_methyl(graph: MolGraph, index: int) -> bool:
    atom = graph.atoms[index]
    if atom.element != "C" or atom.aromatic:
        return False
    neighborhood = graph.neighbors(index)
    if len(neighborhood) != 1:
        return False
    _, bond = neighborhood[0]
    return bond.order == 1 and not bond.aromatic


def _enumerate_edits(graph: MolGraph):
    """Yield (edit label, edited graph) in deterministic order: edit kinds
    a (aliphatic C -> N), b (N -> C), c (append methyl), d (drop terminal
    methyl), each scanning atoms in ascending index order.
    """
    for atom in graph.atoms:
        if (
            atom.element == "C"
            and not atom.aromatic
            and _bond_order_sum(graph, atom.index) <= _NITROGEN_VALENCE
        ):
            yield f"c_to_n@{atom.index}", _substitute(graph, atom.index, "N")
    for atom in graph.atoms:
        if atom.element == "N":
            yield f"n_to_c@{atom.index}", _substitute(graph, atom.index, "C")
    for atom in graph.atoms:
        if (
            atom.element == "C"
            and not atom.aromatic
            and _bond_order_sum(graph, atom.index) < _CARBON_VALENCE
        ):
            yield f"add_methyl@{atom.index}", _append_methyl(graph, atom.index)
    if len(graph.atoms) > 1:
        for atom in graph.atoms:
            if _is_terminal_methyl(graph, atom.index):
                yield f"del_methyl@{atom.index}", _delete_atom(graph, atom.index)


def make_candidate(smiles: str, parent: str = "seed", edit: str = "seed") -> Candidate:
    """Build a Candidate whose descriptors are recomputed from the canonical
    form, so they are consistent with re-parsing by construction.
    """
    canonical = to_canonical(parse_smiles(smiles))
    graph = parse_smiles(canonical)
    return Candidate(
        canonical_smiles=canonical,
        descriptors=compute_descriptors(graph),
        provenance=Provenance(parent=parent, edit=edit),
    )


def generate_analogs(seed: MolGraph, max_out: int) -> list[Candidate]:
    """Enumerate single-edit analogs of the seed in deterministic order,
    deduplicated by canonical SMILES and excluding the seed itself.

    Raises NoValidEdits when the seed admits no legal edit at all.
    """
    if max_out < 1:
        raise ValueError("max_out must be >= 1")
    seed.validate()
    seed_canonical = to_canonical(seed)
    seen = {seed_canonical}
    out: list[Candidate] = []
    any_edit = False
    for edit, edited in _enumerate_edits(seed):
        any_edit = True
        canonical = to_canonical(edited)
        if canonical in seen:
            continue
        seen.add(canonical)
        out.append(
            Candidate(
                canonical_smiles=canonical,
                descriptors=compute_descriptors(parse_smiles(canonical)),
                provenance=Provenance(parent=seed_canonical, edit=edit),
            )
        )
        if len(out) == max_out:
            return out
    if not any_edit:
        raise NoValidEdits(f"no legal edits for seed {seed_canonical!r}")
    return out


def _trapezoid(x: float, zero_lo: float, one_lo: float, one_hi: float, zero_hi: float) -> float:
    if x <= zero_lo or x >= zero_hi:
        return 0.0
    if x < one_lo:
        return (x - zero_lo) / (one_lo - zero_lo)
    if x <= one_hi:
        return 1.0
    return (zero_hi - x) / (zero_hi - one_hi)


def score_druglikeness(descriptors: Descriptors) -> float:
    """Geometric mean of three trapezoidal desirabilities: logP surrogate
    (flat on [1, 3], support [-1, 5]), heavy-atom count (flat on [20, 35],
    support [10, 50]), and heteroatom fraction (flat on [0.1, 0.4], support
    [0, 0.6]). A coarse monotone stand-in for QED, not Bickerton's model.
    """
    d_logp = _trapezoid(descriptors.logp_surrogate, -1.0, 1.0, 3.0, 5.0)
    d_size = _trapezoid(float(descriptors.heavy_atoms), 10.0, 20.0, 35.0, 50.0)
    fraction = descriptors.hetero_total / descriptors.heavy_atoms
    d_het = _trapezoid(fraction, 0.0, 0.1, 0.4, 0.6)
    return (d_logp * d_size * d_het) ** (1.0 / 3.0)


def rank_candidates(candidates: list[Candidate], objective: str = "druglikeness") -> list[Candidate]:
    """Stable descending sort by score; ties broken by ascending canonical
    SMILES. The input list is left unmodified.
    """
    if objective != "druglikeness":
        raise ValueError(f"unknown objective {objective!r}")
    return sorted(
        candidates,
        key=lambda c: (-score_druglikeness(c.descriptors), c.canonical_smiles),
    )
