"""Finite abelian groups, their phase spaces, and the lattices inside them.

The ambient group is G = Z_{N1} x ... x Z_{Nk} with elements stored as tuples
of residues. The dual group is identified with G itself through exponential
characters, so a phase-space point is a pair (x, w) of residue tuples and the
phase space is G x G.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple


class InvalidElementError(ValueError):
    """A residue tuple does not fit the group it was used with."""


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed its configured size cap."""


class PhasePoint(NamedTuple):
    """A phase-space point (x, w): shift by x, modulate by the character w."""

    x: tuple[int, ...]
    w: tuple[int, ...]


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """G = Z_{N1} x ... x Z_{Nk}; the operation is componentwise addition."""

    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if not orders or any(n < 1 for n in orders):
            raise InvalidElementError(f"orders must be integers >= 1, got {self.orders!r}")
        object.__setattr__(self, "orders", orders)

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    @property
    def zero(self) -> tuple[int, ...]:
        return (0,) * len(self.orders)

    def check(self, elem: Iterable[int]) -> tuple[int, ...]:
        elem = tuple(int(c) for c in elem)
        if len(elem) != len(self.orders) or any(
            not 0 <= c < n for c, n in zip(elem, self.orders)
        ):
            raise InvalidElementError(f"{elem!r} is not an element of Z{self.orders}")
        return elem

    def reduce(self, elem: Iterable[int]) -> tuple[int, ...]:
        elem = tuple(int(c) for c in elem)
        if len(elem) != len(self.orders):
            raise InvalidElementError(f"{elem!r} has wrong arity for Z{self.orders}")
        return tuple(c % n for c, n in zip(elem, self.orders))

    def add(self, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        return tuple((p + q) % n for p, q, n in zip(a, b, self.orders))

    def neg(self, a: tuple[int, ...]) -> tuple[int, ...]:
        return tuple((-p) % n for p, n in zip(a, self.orders))

    def elements(self) -> list[tuple[int, ...]]:
        """All elements in canonical (lexicographic) order."""
        return [tuple(t) for t in itertools.product(*(range(n) for n in self.orders))]

    def index(self, elem: tuple[int, ...]) -> int:
        """Position of elem in the canonical order (mixed-radix value)."""
        idx = 0
        for c, n in zip(self.check(elem), self.orders):
            idx = idx * n + c
        return idx


def character_value(group: FiniteAbelianGroup, w: Iterable[int], x: Iterable[int]) -> complex:
    """The character indexed by w evaluated at x: exp(2 pi i sum_j w_j x_j / N_j)."""
    w = group.check(w)
    x = group.check(x)
    # exact reduction mod 1 keeps the angle small before exponentiating
    t = Fraction(0)
    for wj, xj, nj in zip(w, x, group.orders):
        t += Fraction(wj * xj, nj)
    t -= math.floor(t)
    return cmath.exp(2j * math.pi * float(t))


def phase_point(group: FiniteAbelianGroup, x: Iterable[int], w: Iterable[int]) -> PhasePoint:
    return PhasePoint(group.check(x), group.check(w))


def phase_space(group: FiniteAbelianGroup) -> list[PhasePoint]:
    """All of G x G in canonical order."""
    elems = group.elements()
    return [PhasePoint(x, w) for x in elems for w in elems]


def pp_add(group: FiniteAbelianGroup, z1: PhasePoint, z2: PhasePoint) -> PhasePoint:
    return PhasePoint(group.add(z1.x, z2.x), group.add(z1.w, z2.w))


def pp_neg(group: FiniteAbelianGroup, z: PhasePoint) -> PhasePoint:
    return PhasePoint(group.neg(z.x), group.neg(z.w))


def commutation_pairing_trivial(group: FiniteAbelianGroup, z1: PhasePoint, z2: PhasePoint) -> bool:
    """Exact test for w2(x1) == w1(x2), i.e. the shifts at z1 and z2 commute."""
    lcm = math.lcm(*group.orders)
    acc = 0
    for x1j, w1j, x2j, w2j, nj in zip(z1.x, z1.w, z2.x, z2.w, group.orders):
        acc += (w2j * x1j - w1j * x2j) * (lcm // nj)
    return acc % lcm == 0


def _closure(group: FiniteAbelianGroup, base: set[PhasePoint], new: Iterable[PhasePoint]) -> set[PhasePoint]:
    """Subgroup closure of base (already closed, containing zero) plus new points."""
    out = set(base)
    frontier = [z for z in new if z not in out]
    out.update(frontier)
    while frontier:
        added = []
        for a in frontier:
            for b in list(out):
                s = pp_add(group, a, b)
                if s not in out:
                    out.add(s)
                    added.append(s)
        frontier = added
    return out


@dataclass(frozen=True)
class Lattice:
    """A subgroup of phase space G x G, stored as its closed element set."""

    group: FiniteAbelianGroup
    elements: tuple[PhasePoint, ...]
    generators: tuple[PhasePoint, ...] = field(default=())

    def __post_init__(self):
        group = self.group
        gens = tuple(phase_point(group, z[0], z[1]) for z in self.generators)
        elems = tuple(sorted(phase_point(group, z[0], z[1]) for z in self.elements))
        if len(set(elems)) != len(elems):
            raise InvalidElementError("lattice element list contains duplicates")
        zero = PhasePoint(group.zero, group.zero)
        span = _closure(group, {zero}, gens)
        if span != set(elems):
            raise InvalidElementError("generators do not generate the stated element set")
        if group.size ** 2 % len(elems) != 0:
            raise InvalidElementError("subgroup order must divide the phase-space order")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "elements", elems)

    @property
    def size(self) -> int:
        return len(self.elements)

    @cached_property
    def element_set(self) -> frozenset[PhasePoint]:
        return frozenset(self.elements)

    def __contains__(self, z: PhasePoint) -> bool:
        return z in self.element_set

    def index(self, z: PhasePoint) -> int:
        """Position of z in the canonical element order."""
        return self._index_map[z]

    @cached_property
    def _index_map(self) -> dict[PhasePoint, int]:
        return {z: i for i, z in enumerate(self.elements)}


def find_generators(group: FiniteAbelianGroup, elements: Iterable[PhasePoint]) -> tuple[PhasePoint, ...]:
    """A generating set picked greedily in canonical order (deterministic)."""
    target = set(elements)
    zero = PhasePoint(group.zero, group.zero)
    gens: list[PhasePoint] = []
    have: set[PhasePoint] = {zero}
    for z in sorted(target):
        if z not in have:
            gens.append(z)
            have = _closure(group, have, [z])
            if len(have) == len(target):
                break
    if have != target:
        raise InvalidElementError("element set is not closed under the group operation")
    return tuple(gens)


def lattice_from_generators(group: FiniteAbelianGroup, gens: Iterable[PhasePoint]) -> Lattice:
    """The subgroup of G x G generated by gens, with canonical element order."""
    gens = tuple(phase_point(group, z[0], z[1]) for z in gens)
    zero = PhasePoint(group.zero, group.zero)
    elems = _closure(group, {zero}, gens)
    return Lattice(group, tuple(sorted(elems)), gens)


def adjoint_lattice(lat: Lattice) -> Lattice:
    """All phase-space points whose shifts commute with every shift from lat.

    The pairing test is exact integer arithmetic; commuting with the
    generators is enough because the pairing is biadditive.
    """
    group = lat.group
    gens = lat.generators
    pts = [z for z in phase_space(group) if all(commutation_pairing_trivial(group, z, w) for w in gens)]
    return Lattice(group, tuple(sorted(pts)), find_generators(group, pts))


def covolume(lat: Lattice) -> Fraction:
    """Exact covolume |G| / |lat| (counting measure on G)."""
    return Fraction(lat.group.size, lat.size)


def enumerate_subgroups(group: FiniteAbelianGroup, cap: int = 256) -> list[Lattice]:
    """Every subgroup of G x G, canonically ordered and duplicate-free."""
    if group.size ** 2 > cap:
        raise ResourceLimitError(
            f"phase space has {group.size ** 2} points, above the cap {cap}"
        )
    pts = phase_space(group)
    zero = PhasePoint(group.zero, group.zero)
    trivial = frozenset({zero})
    known: set[frozenset[PhasePoint]] = {trivial}
    frontier = [trivial]
    while frontier:
        grown: list[frozenset[PhasePoint]] = []
        for sub in frontier:
            for g in pts:
                if g in sub:
                    continue
                bigger = frozenset(_closure(group, set(sub), [g]))
                if bigger not in known:
                    known.add(bigger)
                    grown.append(bigger)
        frontier = grown
    lattices = []
    for sub in known:
        elems = tuple(sorted(sub))
        lattices.append(Lattice(group, elems, find_generators(group, elems)))
    lattices.sort(key=lambda lat: (lat.size, lat.elements))
    return lattices


# -- JSON wire formats ---------------------------------------------------

def group_to_dict(group: FiniteAbelianGroup) -> dict:
    return {"orders": list(group.orders)}


def group_from_dict(data: dict) -> FiniteAbelianGroup:
    if not isinstance(data, dict) or "orders" not in data:
        raise InvalidElementError("group JSON must be an object with an 'orders' list")
    return FiniteAbelianGroup(tuple(data["orders"]))


def lattice_to_dict(lat: Lattice) -> dict:
    return {
        "orders": list(lat.group.orders),
        "generators": [[list(z.x), list(z.w)] for z in lat.generators],
    }


def lattice_from_dict(data: dict, group: FiniteAbelianGroup | None = None) -> Lattice:
    if not isinstance(data, dict) or "generators" not in data:
        raise InvalidElementError("lattice JSON must be an object with a 'generators' list")
    if group is None:
        group = group_from_dict(data)
    gens = []
    for pair in data["generators"]:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise InvalidElementError(f"generator {pair!r} is not an [x, w] pair")
        gens.append(phase_point(group, pair[0], pair[1]))
    return lattice_from_generators(group, gens)
