"""SMILES subset parsing, molecular descriptors, canonical form, and SVG depiction.

Grammar (v1): organic-subset atoms B, C, N, O, P, S, F, Cl, Br, I; aromatic
b, c, n, o, p, s; bonds -, =, #; branches; ring closures 1-9. No stereo
markers, isotopes, or bracket atoms. Hydrogens are implicit and never counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class SmilesError(ValueError):
    """Base class for structure-input failures."""


class EmptyInput(SmilesError):
    pass


class UnknownToken(SmilesError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnclosedRing(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class Disconnected(SmilesError):
    pass


class TooLarge(ValueError):
    """Raised when a depiction is requested for an oversized graph."""


PLAIN_ELEMENTS = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ELEMENTS = ("b", "c", "n", "o", "p", "s")
BOND_ORDERS = {"-": 1, "=": 2, "#": 3}

DEPICTION_ATOM_LIMIT = 100


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool
    index: int


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int
    aromatic: bool


@dataclass
class MolGraph:
    """A connected molecular graph with implicit hydrogens."""

    atoms: list[Atom]
    bonds: list[Bond]
    ring_closure_count: int
    _adjacency: dict[int, list[tuple[int, Bond]]] | None = field(
        default=None, repr=False, compare=False
    )

    def neighbors(self, index: int) -> list[tuple[int, Bond]]:
        if self._adjacency is None:
            adj: dict[int, list[tuple[int, Bond]]] = {i: [] for i in range(len(self.atoms))}
            for bond in self.bonds:
                adj[bond.a].append((bond.b, bond))
                adj[bond.b].append((bond.a, bond))
            self._adjacency = adj
        return self._adjacency[index]

    def degree(self, index: int) -> int:
        return len(self.neighbors(index))

    def validate(self) -> None:
        n = len(self.atoms)
        if n == 0:
            raise EmptyInput("graph has no atoms")
        seen: set[tuple[int, int]] = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond references missing atom: {bond}")
            if bond.a == bond.b:
                raise ValueError(f"self-bond on atom {bond.a}")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {key}")
            seen.add(key)
        if n > 1:
            reached = {0}
            frontier = [0]
            while frontier:
                current = frontier.pop()
                for other, _ in self.neighbors(current):
                    if other not in reached:
                        reached.add(other)
                        frontier.append(other)
            if len(reached) != n:
                raise Disconnected("graph is not connected")
        expected_cycles = len(self.bonds) - n + 1
        if self.ring_closure_count != expected_cycles:
            raise ValueError(
                f"ring_closure_count {self.ring_closure_count} != cycle count {expected_cycles}"
            )


@dataclass(frozen=True)
class Descriptors:
    """Scalar properties derived from a molecular graph."""

    heavy_atoms: int
    aliphatic_c: int
    aromatic_c: int
    n_count: int
    o_count: int
    other_hetero: int
    hetero_total: int
    ring_count: int
    logp_surrogate: float


def _scan_atom(text: str, i: int) -> tuple[str, bool, int] | None:
    two = text[i : i + 2]
    if two in ("Cl", "Br"):
        return two, False, i + 2
    ch = text[i]
    if ch in ("B", "C", "N", "O", "P", "S", "F", "I"):
        return ch, False, i + 1
    if ch in AROMATIC_ELEMENTS:
        return ch.upper(), True, i + 1
    return None


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string (subset grammar) into a molecular graph.

    Atoms are indexed in token order. Raises EmptyInput, UnknownToken,
    UnclosedRing, UnbalancedParenthesis, or Disconnected.
    """
    if not text:
        raise EmptyInput("empty SMILES input")

    atoms: list[Atom] = []
    bonds: list[Bond] = []
    bond_keys: set[tuple[int, int]] = set()
    branch_stack: list[int] = []
    ring_open: dict[int, tuple[int, str | None]] = {}
    prev: int | None = None
    pending: str | None = None
    closures = 0

    i = 0
    while i < len(text):
        ch = text[i]
        if ch == ".":
            raise Disconnected(f"multi-fragment input is not supported (position {i})")
        if ch == "(":
            if prev is None:
                raise UnknownToken("branch before any atom", i)
            if pending is not None:
                raise UnknownToken("bond symbol before '('", i)
            branch_stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if pending is not None:
                raise UnknownToken("dangling bond before ')'", i)
            if not branch_stack:
                raise UnbalancedParenthesis("unmatched ')'", i)
            prev = branch_stack.pop()
            i += 1
            continue
        if ch in BOND_ORDERS:
            if prev is None:
                raise UnknownToken("bond symbol before any atom", i)
            if pending is not None:
                raise UnknownToken("two bond symbols in a row", i)
            pending = ch
            i += 1
            continue
        if ch.isdigit():
            digit = int(ch)
            if digit == 0:
                raise UnknownToken("ring closure digit 0", i)
            if prev is None:
                raise UnknownToken("ring closure before any atom", i)
            if digit in ring_open:
                opened_at, opened_bond = ring_open.pop(digit)
                if pending is not None and opened_bond is not None and pending != opened_bond:
                    raise UnknownToken("conflicting bond symbols on ring closure", i)
                symbol = pending if pending is not None else opened_bond
                if opened_at == prev:
                    raise UnknownToken("ring closure bonds an atom to itself", i)
                key = (min(opened_at, prev), max(opened_at, prev))
                if key in bond_keys:
                    raise UnknownToken("ring closure duplicates an existing bond", i)
                aromatic = (
                    symbol is None and atoms[opened_at].aromatic and atoms[prev].aromatic
                )
                order = BOND_ORDERS[symbol] if symbol is not None else 1
                bonds.append(Bond(opened_at, prev, order, aromatic))
                bond_keys.add(key)
                closures += 1
            else:
                ring_open[digit] = (prev, pending)
            pending = None
            i += 1
            continue
        scanned = _scan_atom(text, i)
        if scanned is None:
            raise UnknownToken(f"unknown token {ch!r}", i)
        element, aromatic, next_i = scanned
        index = len(atoms)
        atoms.append(Atom(element, aromatic, index))
        if prev is not None:
            bond_aromatic = pending is None and aromatic and atoms[prev].aromatic
            order = BOND_ORDERS[pending] if pending is not None else 1
            bonds.append(Bond(prev, index, order, bond_aromatic))
            bond_keys.add((prev, index))
        prev = index
        pending = None
        i = next_i

    if pending is not None:
        raise UnknownToken("dangling bond at end of input", len(text))
    if branch_stack:
        raise UnbalancedParenthesis("unclosed '('", len(text))
    if ring_open:
        raise UnclosedRing(f"unclosed ring closure digits: {sorted(ring_open)}")

    graph = MolGraph(atoms=atoms, bonds=bonds, ring_closure_count=closures)
    graph.validate()
    return graph


def logp_tenths(aliphatic_c: int, aromatic_c: int, n_count: int, o_count: int,
                other_hetero: int) -> int:
    """LogP surrogate in integer tenths: 5a + 3r - 10n - 7o - 5x."""
    return (
        5 * aliphatic_c
        + 3 * aromatic_c
        - 10 * n_count
        - 7 * o_count
        - 5 * other_hetero
    )


def compute_descriptors(graph: MolGraph) -> Descriptors:
    """Compute deterministic scalar descriptors for a valid graph.

    The logP surrogate is a fixed additive atom-contribution stand-in
    (0.5 per aliphatic C, 0.3 per aromatic C, -1.0 per N, -0.7 per O,
    -0.5 per other heteroatom), not a real partition-coefficient model.
    """
    aliphatic_c = aromatic_c = n_count = o_count = other = 0
    for atom in graph.atoms:
        if atom.element == "C":
            if atom.aromatic:
                aromatic_c += 1
            else:
                aliphatic_c += 1
        elif atom.element == "N":
            n_count += 1
        elif atom.element == "O":
            o_count += 1
        else:
            other += 1
    heavy = len(graph.atoms)
    tenths = logp_tenths(aliphatic_c, aromatic_c, n_count, o_count, other)
    return Descriptors(
        heavy_atoms=heavy,
        aliphatic_c=aliphatic_c,
        aromatic_c=aromatic_c,
        n_count=n_count,
        o_count=o_count,
        other_hetero=other,
        hetero_total=n_count + o_count + other,
        ring_count=len(graph.bonds) - heavy + 1,
        logp_surrogate=tenths / 10,
    )


# --- canonical form ---------------------------------------------------------


def _initial_keys(graph: MolGraph) -> list[tuple]:
    return [
        (atom.element, atom.aromatic, graph.degree(atom.index))
        for atom in graph.atoms
    ]


def _normalize(keys: list) -> list[int]:
    ranking = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [ranking[key] for key in keys]


def _refine(graph: MolGraph, colors: list[int]) -> list[int]:
    while True:
        keys = []
        for i in range(len(graph.atoms)):
            neighborhood = sorted(
                (bond.order, bond.aromatic, colors[j]) for j, bond in graph.neighbors(i)
            )
            keys.append((colors[i], tuple(neighborhood)))
        refined = _normalize(keys)
        if len(set(refined)) == len(set(colors)):
            return refined
        colors = refined


def _atom_symbol(atom: Atom) -> str:
    return atom.element.lower() if atom.aromatic else atom.element


def _bond_token(graph: MolGraph, bond: Bond, u: int, v: int) -> str:
    if bond.aromatic:
        return ""
    if bond.order == 2:
        return "="
    if bond.order == 3:
        return "#"
    # A plain single bond between two aromatic atoms must be written
    # explicitly, or re-parsing would read it as aromatic.
    if graph.atoms[u].aromatic and graph.atoms[v].aromatic:
        return "-"
    return ""


def _write_smiles(graph: MolGraph, ranks: list[int]) -> str:
    n = len(graph.atoms)
    start = min(range(n), key=lambda i: ranks[i])

    visited: set[int] = set()
    order: list[int] = []
    children: dict[int, list[tuple[int, Bond]]] = {i: [] for i in range(n)}
    closures: list[tuple[int, int, Bond]] = []  # (earlier, later, bond)
    consumed: set[tuple[int, int]] = set()

    stack: list[tuple[int, list[tuple[int, Bond]]]] = []
    visited.add(start)
    order.append(start)
    stack.append((start, sorted(graph.neighbors(start), key=lambda t: ranks[t[0]])))
    while stack:
        u, nbrs = stack[-1]
        advanced = False
        while nbrs:
            v, bond = nbrs.pop(0)
            key = (min(u, v), max(u, v))
            if key in consumed:
                continue
            consumed.add(key)
            if v in visited:
                closures.append((v, u, bond))
                continue
            visited.add(v)
            order.append(v)
            children[u].append((v, bond))
            stack.append((v, sorted(graph.neighbors(v), key=lambda t: ranks[t[0]])))
            advanced = True
            break
        if not advanced and not nbrs:
            stack.pop()

    position = {atom: k for k, atom in enumerate(order)}
    opens_at: dict[int, list[tuple[int, Bond]]] = {i: [] for i in range(n)}
    closes_at: dict[int, list[tuple[int, Bond]]] = {i: [] for i in range(n)}
    for earlier, later, bond in closures:
        opens_at[earlier].append((later, bond))
        closes_at[later].append((earlier, bond))

    digit_for: dict[tuple[int, int], int] = {}
    free_digits = list(range(1, 10))
    for u in order:
        for earlier, bond in sorted(closes_at[u], key=lambda t: position[t[0]]):
            free_digits.append(digit_for[(earlier, u)])
            free_digits.sort()
        for later, bond in sorted(opens_at[u], key=lambda t: position[t[0]]):
            if not free_digits:
                raise ValueError("more than 9 simultaneously open ring closures")
            digit_for[(u, later)] = free_digits.pop(0)

    def emit(u: int) -> str:
        parts = [_atom_symbol(graph.atoms[u])]
        for earlier, bond in sorted(closes_at[u], key=lambda t: position[t[0]]):
            parts.append(f"{_bond_token(graph, bond, earlier, u)}{digit_for[(earlier, u)]}")
        for later, bond in sorted(opens_at[u], key=lambda t: position[t[0]]):
            parts.append(str(digit_for[(u, later)]))
        kids = children[u]
        for v, bond in kids[:-1]:
            parts.append(f"({_bond_token(graph, bond, u, v)}{emit(v)})")
        if kids:
            v, bond = kids[-1]
            parts.append(f"{_bond_token(graph, bond, u, v)}{emit(v)}")
        return "".join(parts)

    return emit(start)


def to_canonical(graph: MolGraph) -> str:
    """Emit a canonical SMILES string: equal graphs under atom relabeling
    yield equal strings, and parse -> to_canonical is idempotent.

    Atom colors are refined Morgan-style; remaining ties are broken by
    individualizing each tied atom in turn and keeping the lexicographically
    smallest emitted string.
    """
    if len(graph.atoms) == 1:
        return _atom_symbol(graph.atoms[0])
    best: str | None = None

    def search(colors: list[int]) -> None:
        nonlocal best
        counts: dict[int, list[int]] = {}
        for i, color in enumerate(colors):
            counts.setdefault(color, []).append(i)
        tied = [color for color, members in counts.items() if len(members) > 1]
        if not tied:
            candidate = _write_smiles(graph, colors)
            if best is None or candidate < best:
                best = candidate
            return
        for atom in counts[min(tied)]:
            bumped = list(colors)
            bumped[atom] = -1
            search(_refine(graph, _normalize(bumped)))

    search(_refine(graph, _normalize(_initial_keys(graph))))
    assert best is not None
    return best


# --- depiction --------------------------------------------------------------


def _layout(graph: MolGraph) -> list[tuple[float, float]]:
    n = len(graph.atoms)
    if n == 1:
        return [(0.0, 0.0)]
    positions = [
        (math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n)) for k in range(n)
    ]
    ideal = 1.0
    bonded = {(min(b.a, b.b), max(b.a, b.b)) for b in graph.bonds}
    for iteration in range(150):
        temperature = 0.12 * (1.0 - iteration / 150) + 0.01
        moves = [(0.0, 0.0)] * n
        for i in range(n):
            xi, yi = positions[i]
            for j in range(i + 1, n):
                xj, yj = positions[j]
                dx, dy = xi - xj, yi - yj
                dist = math.hypot(dx, dy) or 1e-6
                push = ideal * ideal / dist
                fx, fy = dx / dist * push, dy / dist * push
                mx, my = moves[i]
                moves[i] = (mx + fx, my + fy)
                mx, my = moves[j]
                moves[j] = (mx - fx, my - fy)
        for a, b in bonded:
            xa, ya = positions[a]
            xb, yb = positions[b]
            dx, dy = xa - xb, ya - yb
            dist = math.hypot(dx, dy) or 1e-6
            pull = dist * dist / ideal
            fx, fy = dx / dist * pull, dy / dist * pull
            mx, my = moves[a]
            moves[a] = (mx - fx, my - fy)
            mx, my = moves[b]
            moves[b] = (mx + fx, my + fy)
        for i in range(n):
            mx, my = moves[i]
            magnitude = math.hypot(mx, my) or 1e-6
            step = min(magnitude, temperature)
            x, y = positions[i]
            positions[i] = (x + mx / magnitude * step, y + my / magnitude * step)
    return positions


def render_depiction(graph: MolGraph) -> str:
    """Render a deterministic SVG depiction: one labeled node per atom,
    one edge per bond. Same graph in, byte-identical document out.
    """
    if len(graph.atoms) > DEPICTION_ATOM_LIMIT:
        raise TooLarge(f"depiction limited to {DEPICTION_ATOM_LIMIT} atoms")
    raw = _layout(graph)
    xs = [p[0] for p in raw]
    ys = [p[1] for p in raw]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-6)
    margin, size = 40.0, 400.0
    scale = (size - 2 * margin) / span

    def place(p: tuple[float, float]) -> tuple[float, float]:
        return (
            round(margin + (p[0] - min(xs)) * scale, 2),
            round(margin + (p[1] - min(ys)) * scale, 2),
        )

    points = [place(p) for p in raw]
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="400" height="400" '
        'viewBox="0 0 400 400">'
    ]
    for bond in graph.bonds:
        xa, ya = points[bond.a]
        xb, yb = points[bond.b]
        style = "aromatic" if bond.aromatic else f"order-{bond.order}"
        lines.append(
            f'<line class="bond {style}" x1="{xa}" y1="{ya}" x2="{xb}" y2="{yb}" '
            f'stroke="#333" stroke-width="{1 + bond.order}"/>'
        )
    for atom in graph.atoms:
        x, y = points[atom.index]
        ring = "aromatic" if atom.aromatic else "plain"
        lines.append(
            f'<circle class="atom {ring}" cx="{x}" cy="{y}" r="12" fill="#fff" '
            f'stroke="#555"/>'
        )
        lines.append(
            f'<text x="{x}" y="{y}" text-anchor="middle" dy="4" '
            f'font-size="12">{atom.element}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines)
