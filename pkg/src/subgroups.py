from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from functools import cached_property
from typing import Hashable, List, Optional, Sequence, Tuple

from src.group_kernel import (GroupDesc, GroupElement, GroupKind, all_elements, enumerate_elements, identity,
                              invert, lattice_intersection, letter_element, multiply, shortlex_key, subgroup_lattice,
                              vector_element, word_length)
from src.stallings import (CoreGraph, MalnormalVerdict, TotalityVerdict, conjugate_into, core_graph,
                           coset_key, coset_representative, intersection, is_malnormal_collection, is_total,
                           membership, subgroup_basis)
from src.toolkit_errors import GroupMismatch

logger = logging.getLogger(__name__)

INDEX_SEARCH_BOUND = 10_000
COSET_SEARCH_LIMIT = 20_000


class Subgroup(ABC):
    """A finitely generated subgroup of a vertex group with a membership and left-coset oracle."""

    def __init__(self, group: GroupDesc, generators: Sequence[GroupElement]):
        for generator in generators:
            if generator.group != group:
                raise GroupMismatch(f"Generator {generator} does not belong to the ambient group")
        self.group = group
        self.generators: Tuple[GroupElement, ...] = tuple(generators)

    @abstractmethod
    def contains(self, x: GroupElement) -> bool:
        ...

    @abstractmethod
    def coset_key(self, x: GroupElement) -> Hashable:
        """Key that is equal for x and y iff x·H = y·H."""

    @abstractmethod
    def coset_rep(self, x: GroupElement) -> GroupElement:
        """ShortLex-least element of x·H (or a canonical element where the search is bounded)."""

    @abstractmethod
    def is_finite(self) -> bool:
        ...

    @abstractmethod
    def intersection(self, other: "Subgroup") -> "Subgroup":
        ...

    def is_trivial(self) -> bool:
        return all(g.is_identity() for g in self.generators)

    def contains_subgroup(self, other: "Subgroup") -> bool:
        return all(self.contains(g) for g in other.generators)

    def equals(self, other: "Subgroup") -> bool:
        return self.contains_subgroup(other) and other.contains_subgroup(self)

    def conjugate(self, g: GroupElement) -> "Subgroup":
        """g·H·g⁻¹"""
        g_inverse = invert(g)
        return make_subgroup(self.group, [multiply(multiply(g, h), g_inverse) for h in self.generators])

    def index_in(self, container: "Subgroup", bound: int = INDEX_SEARCH_BOUND) -> Optional[int]:
        """[container : self] by orbit search over the left cosets; None if infinite or above *bound*."""
        start = identity(self.group)
        seen = {self.coset_key(start)}
        queue = [start]
        steps = list(container.generators) + [invert(g) for g in container.generators]
        for x in queue:
            for s in steps:
                y = multiply(s, x)
                key = self.coset_key(y)
                if key in seen:
                    continue
                seen.add(key)
                if len(seen) > bound:
                    return None
                queue.append(y)
        return len(seen)

    def is_total_relative(self, peripherals: Sequence["Subgroup"]) -> TotalityVerdict:
        """Every infinite H ∩ g·P·g⁻¹ equals g·P·g⁻¹."""
        for index, peripheral in enumerate(peripherals):
            if peripheral.is_finite():
                continue
            meet = self.intersection(peripheral)
            if not meet.is_finite() and not meet.equals(peripheral):
                return TotalityVerdict(False, identity(self.group), index)
        return TotalityVerdict(True)

    def conjugate_into(self, other: "Subgroup") -> Optional[GroupElement]:
        """Some g with H ≤ g·K·g⁻¹, or None."""
        return identity(self.group) if other.contains_subgroup(self) else None

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{', '.join(str(g) for g in self.generators)}>"


class FreeSubgroup(Subgroup):
    def __init__(self, group: GroupDesc, generators: Sequence[GroupElement]):
        super().__init__(group, generators)
        self.core: CoreGraph = core_graph(group, self.generators)

    @cached_property
    def _to_base(self):
        return self.core.words_to_base()

    def contains(self, x: GroupElement) -> bool:
        return membership(self.core, x)

    def coset_key(self, x: GroupElement) -> Hashable:
        vertex, remainder = coset_key(self.core, x)
        return ("core", vertex) if not remainder else ("off", vertex, remainder)

    def coset_rep(self, x: GroupElement) -> GroupElement:
        return coset_representative(self.core, x, self._to_base)

    def is_trivial(self) -> bool:
        return self.core.is_trivial()

    def is_finite(self) -> bool:
        return self.core.is_trivial()

    def equals(self, other: Subgroup) -> bool:
        if isinstance(other, FreeSubgroup):
            return self.core.same_subgroup(other.core)
        return super().equals(other)

    def intersection(self, other: Subgroup) -> Subgroup:
        meet = intersection(self.core, other.core)
        return FreeSubgroup(self.group, [GroupElement(self.group, w) for w in subgroup_basis(meet)])

    def is_total_relative(self, peripherals: Sequence[Subgroup]) -> TotalityVerdict:
        return is_total(self.core, [p.core for p in peripherals])

    def conjugate_into(self, other: Subgroup) -> Optional[GroupElement]:
        return conjugate_into(self.core, other.core)


class AbelianSubgroup(Subgroup):
    def __init__(self, group: GroupDesc, generators: Sequence[GroupElement]):
        super().__init__(group, generators)
        self.lattice = subgroup_lattice(group, self.generators)

    def contains(self, x: GroupElement) -> bool:
        return self.lattice.contains(x.payload)

    def coset_key(self, x: GroupElement) -> Hashable:
        remainder, _ = self.lattice.reduce(x.payload)
        return remainder

    def coset_rep(self, x: GroupElement) -> GroupElement:
        canonical = vector_element(self.group, self.coset_key(x))
        key = self.coset_key(x)
        for searched, candidate in enumerate(enumerate_elements(self.group, word_length(canonical))):
            if searched > COSET_SEARCH_LIMIT:
                logger.warning(f"Coset search in {self.group.symbols} stopped at {COSET_SEARCH_LIMIT}; "
                               f"using the canonical remainder {canonical}")
                return canonical
            if self.coset_key(candidate) == key:
                return candidate
        return canonical

    def is_finite(self) -> bool:
        rank = self.group.rank
        return all(not any(g.payload[:rank]) for g in self.generators)

    def intersection(self, other: Subgroup) -> Subgroup:
        vectors = lattice_intersection(self.group, self.lattice.rows, other.lattice.rows)
        return AbelianSubgroup(self.group, [vector_element(self.group, v) for v in vectors])


class FiniteSubgroup(Subgroup):
    def __init__(self, group: GroupDesc, generators: Sequence[GroupElement]):
        super().__init__(group, generators)
        self.elements = self._closure()

    def _closure(self) -> frozenset:
        start = identity(self.group)
        seen = {start.payload: start}
        queue = [start]
        for x in queue:
            for g in self.generators:
                y = multiply(x, g)
                if y.payload not in seen:
                    seen[y.payload] = y
                    queue.append(y)
        return frozenset(seen.values())

    def contains(self, x: GroupElement) -> bool:
        return x in self.elements

    def coset_rep(self, x: GroupElement) -> GroupElement:
        return min((multiply(x, h) for h in self.elements), key=shortlex_key)

    def coset_key(self, x: GroupElement) -> Hashable:
        return self.coset_rep(x).payload

    def is_trivial(self) -> bool:
        return len(self.elements) == 1

    def is_finite(self) -> bool:
        return True

    def intersection(self, other: Subgroup) -> Subgroup:
        return FiniteSubgroup(self.group, sorted(self.elements & other.elements, key=shortlex_key))

    def conjugate_into(self, other: Subgroup) -> Optional[GroupElement]:
        for g in all_elements(self.group):
            if other.conjugate(g).contains_subgroup(self):
                return g
        return None


def make_subgroup(group: GroupDesc, generators: Sequence[GroupElement]) -> Subgroup:
    if group.kind == GroupKind.FREE:
        return FreeSubgroup(group, generators)
    if group.kind == GroupKind.ABELIAN:
        return AbelianSubgroup(group, generators)
    return FiniteSubgroup(group, generators)


def whole_group(group: GroupDesc) -> Subgroup:
    if group.kind == GroupKind.FINITE:
        return FiniteSubgroup(group, all_elements(group))
    return make_subgroup(group, _basis_elements(group))


def _basis_elements(group: GroupDesc) -> List[GroupElement]:
    return [letter_element(group, (symbol, 1)) for symbol in group.symbols]


def almost_malnormal_collection(subgroups: Sequence[Subgroup]) -> MalnormalVerdict:
    """
    Almost malnormal: H_i ∩ g·H_j·g⁻¹ is finite unless i = j and g ∈ H_i.
    free: exact via pullbacks. abelian: every infinite member must be the whole group and
    distinct members meet finitely. finite: always.
    """
    if not subgroups:
        return MalnormalVerdict(True)
    group = subgroups[0].group
    if group.kind == GroupKind.FREE:
        return is_malnormal_collection([s.core for s in subgroups])
    if group.kind == GroupKind.FINITE:
        return MalnormalVerdict(True)
    everything = whole_group(group)
    for i, first in enumerate(subgroups):
        if first.is_finite():
            continue
        if not first.contains_subgroup(everything):
            # any g outside H_i commutes with H_i, so g·H_i·g⁻¹ = H_i is an infinite intersection
            witness = next(letter for letter in _basis_elements(group) if not first.contains(letter))
            return MalnormalVerdict(False, witness, i, i)
        for j in range(i + 1, len(subgroups)):
            if not first.intersection(subgroups[j]).is_finite():
                return MalnormalVerdict(False, identity(group), i, j)
    return MalnormalVerdict(True)
