"""SMILES parsing and circular substructure fingerprints.

The parser covers the organic subset, aromatic lowercase forms, bracket
atoms (isotope parsed and discarded), branches, ring closures (including
``%nn``) and the bond symbols ``- = # : / \\`` (directional bonds read as
single).  There is no aromaticity perception, valence checking or implicit
hydrogen inference: fingerprints only need invariants that are consistent
across spellings of the same molecule, not chemical validity.

Substructure identifiers follow the circular-fingerprint scheme: for each
heavy atom a radius-0 identifier is hashed from the atom's invariant tuple,
and a radius-1 identifier folds in the sorted (bond order, neighbor
radius-0) pairs.  Hashing is a fixed, seedless 32-bit mix so identifiers are
stable across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SmilesError(ValueError):
    """Base class for parse failures; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnmatchedRingBond(SmilesError):
    pass


class UnmatchedParenthesis(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class EmptyMolecule(SmilesError):
    pass


class TrailingGarbage(SmilesError):
    pass


# Elements writable bare (uppercase, outside brackets).
ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
# Elements writable lowercase as aromatic atoms.
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s", "se", "as"}

_ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
ELEMENT_NUMBER = {symbol: i + 1 for i, symbol in enumerate(_ELEMENTS)}

_AROMATIC_BOND = 4  # internal order code used for hashing aromatic bonds


@dataclass
class Atom:
    element: str
    charge: int = 0
    explicit_h: int = 0
    aromatic: bool = False
    in_ring: bool = False


@dataclass
class Bond:
    a: int
    b: int
    order: int = 1  # 1, 2, 3; aromatic bonds keep order 1 with the flag set
    aromatic: bool = False
    in_ring: bool = False


@dataclass
class MolecularGraph:
    atoms: list[Atom]
    bonds: list[Bond]
    smiles: str
    _adjacency: list[list[tuple[int, int]]] = field(default=None, repr=False)

    def neighbors(self, index: int) -> list[tuple[int, int]]:
        """(neighbor atom index, bond index) pairs for one atom."""
        if self._adjacency is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for bi, bond in enumerate(self.bonds):
                adj[bond.a].append((bond.b, bi))
                adj[bond.b].append((bond.a, bi))
            self._adjacency = adj
        return self._adjacency[index]


@dataclass(frozen=True)
class SubstructureId:
    """Hashed identifier of one circular atom environment."""

    hash: int  # 32-bit unsigned
    radius: int  # 0 or 1
    center: int  # atom index


MolSentence = list  # ordered list of SubstructureId, two per heavy atom


# ---------------------------------------------------------------------------
# parsing


class _PendingBond:
    __slots__ = ("order", "aromatic", "explicit")

    def __init__(self):
        self.clear()

    def clear(self):
        self.order = 1
        self.aromatic = False
        self.explicit = False

    def set(self, symbol: str):
        self.explicit = True
        if symbol == "=":
            self.order = 2
        elif symbol == "#":
            self.order = 3
        elif symbol == ":":
            self.order = 1
            self.aromatic = True
        else:  # '-', '/', '\\' all read as single
            self.order = 1


def _parse_bracket(text: str, start: int) -> tuple[Atom, int]:
    """Parse a bracket atom starting at ``text[start] == '['``.

    Returns the atom and the index one past the closing bracket.  Isotope
    and stereo marks are parsed and discarded; an atom-class suffix ``:n``
    is tolerated.
    """
    i = start + 1
    n = len(text)

    def fail_end():
        raise TrailingGarbage("unterminated bracket atom", start)

    # isotope (discarded)
    while i < n and text[i].isdigit():
        i += 1
    if i >= n:
        fail_end()

    # element symbol; lowercase start means aromatic
    aromatic = False
    if text[i].islower():
        sym = text[i : i + 2] if text[i : i + 2] in AROMATIC_SYMBOLS else text[i]
        if sym not in AROMATIC_SYMBOLS:
            raise UnknownElement(f"unknown aromatic element {sym!r}", i)
        element = sym.capitalize()
        aromatic = True
        i += len(sym)
    elif text[i].isupper():
        if i + 1 < n and text[i + 1].islower() and text[i : i + 2] in ELEMENT_NUMBER:
            element = text[i : i + 2]
            i += 2
        else:
            element = text[i]
            i += 1
        if element not in ELEMENT_NUMBER:
            raise UnknownElement(f"unknown element {element!r}", i - len(element))
    elif text[i] == "*":
        raise UnknownElement("wildcard atoms are not supported", i)
    else:
        raise TrailingGarbage(f"unexpected {text[i]!r} in bracket atom", i)

    # stereo marks (discarded)
    while i < n and text[i] == "@":
        i += 1

    # explicit hydrogen count
    explicit_h = 0
    if i < n and text[i] == "H":
        i += 1
        digits = ""
        while i < n and text[i].isdigit():
            digits += text[i]
            i += 1
        explicit_h = int(digits) if digits else 1

    # formal charge: +, -, ++, --, +2, -3 ...
    charge = 0
    if i < n and text[i] in "+-":
        sign = 1 if text[i] == "+" else -1
        symbol = text[i]
        i += 1
        digits = ""
        while i < n and text[i].isdigit():
            digits += text[i]
            i += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while i < n and text[i] == symbol:
                charge += sign
                i += 1

    # atom class (discarded)
    if i < n and text[i] == ":":
        i += 1
        if i >= n or not text[i].isdigit():
            raise TrailingGarbage("atom class expects digits", i)
        while i < n and text[i].isdigit():
            i += 1

    if i >= n or text[i] != "]":
        fail_end()
    return Atom(element, charge=charge, explicit_h=explicit_h, aromatic=aromatic), i + 1


def _mark_rings(atoms: list[Atom], bonds: list[Bond]) -> None:
    """Flag ring atoms/bonds: a bond is in a ring iff it is not a bridge.

    Molecules are small, so the direct test (remove the bond, check the
    endpoints stay connected) is plenty fast and hard to get wrong.
    """
    n = len(atoms)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, bi))
        adj[bond.b].append((bond.a, bi))

    for bi, bond in enumerate(bonds):
        seen = {bond.a}
        frontier = [bond.a]
        reached = False
        while frontier and not reached:
            node = frontier.pop()
            for nxt, via in adj[node]:
                if via == bi or nxt in seen:
                    continue
                if nxt == bond.b:
                    reached = True
                    break
                seen.add(nxt)
                frontier.append(nxt)
        if reached:
            bond.in_ring = True
            atoms[bond.a].in_ring = True
            atoms[bond.b].in_ring = True


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string into a molecular graph.

    Raises a :class:`SmilesError` subclass with a character offset for
    malformed input.  Hydrogen bracket atoms are folded into their heavy
    neighbor's explicit-H count; hydrogen-only input is rejected.
    """
    if not text:
        raise EmptyMolecule("empty SMILES string", 0)

    atoms: list[Atom] = []
    bonds: list[Bond] = []
    bond_keys: set[tuple[int, int]] = set()
    prev: int | None = None
    branch_stack: list[tuple[int | None, int]] = []
    pending = _PendingBond()
    ring_open: dict[int, tuple[int, _PendingBond | None, int]] = {}

    def add_bond(a: int, b: int, offset: int, open_pending=None):
        if a == b:
            raise UnmatchedRingBond("ring closure bonds an atom to itself", offset)
        key = (min(a, b), max(a, b))
        if key in bond_keys:
            raise UnmatchedRingBond("duplicate bond between the same atoms", offset)
        bond_keys.add(key)
        # Explicit symbol at either end wins; otherwise aromatic when both
        # endpoints are aromatic atoms.
        src = pending if pending.explicit else open_pending
        if src is not None and src.explicit:
            order, aromatic = src.order, src.aromatic
        else:
            order = 1
            aromatic = atoms[a].aromatic and atoms[b].aromatic
        bonds.append(Bond(a, b, order=order, aromatic=aromatic))

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise UnmatchedParenthesis("branch before any atom", i)
            branch_stack.append((prev, i))
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise UnmatchedParenthesis("unexpected ')'", i)
            prev, _ = branch_stack.pop()
            i += 1
        elif ch in "-=#:/\\":
            pending.set(ch)
            i += 1
        elif ch.isdigit() or ch == "%":
            if ch == "%":
                if i + 2 >= n or not (text[i + 1].isdigit() and text[i + 2].isdigit()):
                    raise TrailingGarbage("'%' ring closure expects two digits", i)
                number = int(text[i + 1 : i + 3])
                width = 3
            else:
                number = int(ch)
                width = 1
            if prev is None:
                raise UnmatchedRingBond("ring closure before any atom", i)
            if number in ring_open:
                open_atom, open_bond, _ = ring_open.pop(number)
                add_bond(open_atom, prev, i, open_pending=open_bond)
            else:
                snapshot = None
                if pending.explicit:
                    snapshot = _PendingBond()
                    snapshot.order = pending.order
                    snapshot.aromatic = pending.aromatic
                    snapshot.explicit = True
                ring_open[number] = (prev, snapshot, i)
            pending.clear()
            i += width
        elif ch == "[":
            atom, end = _parse_bracket(text, i)
            atoms.append(atom)
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, i)
            prev = idx
            pending.clear()
            i = end
        elif ch.isupper():
            if text[i : i + 2] in ("Cl", "Br"):
                symbol = text[i : i + 2]
            elif ch in ORGANIC_SUBSET:
                symbol = ch
            else:
                raise UnknownElement(
                    f"{ch!r} is not in the organic subset (use brackets)", i
                )
            atoms.append(Atom(symbol))
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, i)
            prev = idx
            pending.clear()
            i += len(symbol)
        elif ch.islower():
            if ch not in AROMATIC_SYMBOLS:
                raise UnknownElement(f"unknown aromatic atom {ch!r}", i)
            atoms.append(Atom(ch.upper(), aromatic=True))
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, i)
            prev = idx
            pending.clear()
            i += 1
        else:
            raise TrailingGarbage(f"unexpected character {ch!r}", i)

    if branch_stack:
        raise UnmatchedParenthesis("unclosed '('", branch_stack[-1][1])
    if ring_open:
        number, (_, _, offset) = min(ring_open.items(), key=lambda kv: kv[1][2])
        raise UnmatchedRingBond(f"ring closure {number} never closed", offset)

    atoms, bonds = _fold_hydrogens(atoms, bonds)
    if not atoms:
        raise EmptyMolecule("no heavy atoms", 0)

    _mark_rings(atoms, bonds)
    # Aromatic flags come verbatim from the syntax, but an aromatic atom
    # must sit in a ring; downgrade stray flags so the invariant holds.
    for atom in atoms:
        if atom.aromatic and not atom.in_ring:
            atom.aromatic = False
    for bond in bonds:
        if bond.aromatic and not bond.in_ring:
            bond.aromatic = False

    return MolecularGraph(atoms, bonds, text)


def _fold_hydrogens(atoms: list[Atom], bonds: list[Bond]):
    """Merge explicit [H] atoms into their heavy neighbor's H count."""
    h_indices = {i for i, a in enumerate(atoms) if a.element == "H"}
    if not h_indices:
        return atoms, bonds
    for bond in bonds:
        if bond.a in h_indices and bond.b not in h_indices:
            atoms[bond.b].explicit_h += 1
        elif bond.b in h_indices and bond.a not in h_indices:
            atoms[bond.a].explicit_h += 1
    remap: dict[int, int] = {}
    kept: list[Atom] = []
    for i, atom in enumerate(atoms):
        if i in h_indices:
            continue
        remap[i] = len(kept)
        kept.append(atom)
    new_bonds = [
        Bond(remap[b.a], remap[b.b], b.order, b.aromatic)
        for b in bonds
        if b.a not in h_indices and b.b not in h_indices
    ]
    return kept, new_bonds


# ---------------------------------------------------------------------------
# hashing and fingerprints

_MASK32 = 0xFFFFFFFF


def _mix32(values) -> int:
    """Fixed, seedless 32-bit mix of a sequence of integers."""
    h = 0x811C9DC5
    for v in values:
        v &= _MASK32
        h ^= v
        h = (h * 0x01000193) & _MASK32
        h ^= h >> 15
        h = (h * 0x2C1B3C6D) & _MASK32
    h ^= h >> 12
    h = (h * 0x297A2D39) & _MASK32
    h ^= h >> 15
    return h


def _atom_invariant(mol: MolecularGraph, index: int) -> tuple:
    atom = mol.atoms[index]
    return (
        ELEMENT_NUMBER[atom.element],
        len(mol.neighbors(index)),
        atom.charge & _MASK32,
        atom.explicit_h,
        int(atom.aromatic),
        int(atom.in_ring),
    )


def _bond_code(bond: Bond) -> int:
    return _AROMATIC_BOND if bond.aromatic else bond.order


def morgan_sentence(mol: MolecularGraph) -> MolSentence:
    """Per-atom substructure identifiers, radius 0 then radius 1.

    Atoms appear in input order, so the sentence has exactly two tokens per
    heavy atom.  Identifiers depend only on the atom environment, never on
    input order.
    """
    radius0 = [_mix32(_atom_invariant(mol, i)) for i in range(len(mol.atoms))]
    sentence: MolSentence = []
    for i in range(len(mol.atoms)):
        neighborhood = sorted(
            (_bond_code(mol.bonds[bi]), radius0[j]) for j, bi in mol.neighbors(i)
        )
        parts = [radius0[i]]
        for code, nbr in neighborhood:
            parts.append(code)
            parts.append(nbr)
        radius1 = _mix32(parts)
        sentence.append(SubstructureId(radius0[i], 0, i))
        sentence.append(SubstructureId(radius1, 1, i))
    return sentence


def fingerprint(mol: MolecularGraph) -> frozenset[int]:
    """The deduplicated set of all substructure identifiers."""
    return frozenset(token.hash for token in morgan_sentence(mol))


def tanimoto(a, b) -> float:
    """|a ∩ b| / |a ∪ b|; two empty sets score 0 by convention."""
    a, b = set(a), set(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union
