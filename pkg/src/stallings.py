from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from src.group_kernel import (GroupDesc, GroupElement, GroupKind, Letter, Word, identity, invert,
                              invert_word, multiply, reduce, shortlex_key)
from src.toolkit_errors import GroupMismatch, NotFreeGroup

logger = logging.getLogger(__name__)

Edge = Tuple[int, str, int]
BASE = 0


@dataclass(frozen=True)
class CoreGraph:
    """
    Folded core graph of a f.g. subgroup of a free group.
    Vertices are 0..vertex_count-1, base is 0, numbering is canonical (BFS from base in letter order),
    so two cores are equal iff they represent the same subgroup.
    outputs, when present, label each edge with an element of another group (edge transport).
    """
    group: GroupDesc
    vertex_count: int
    edges: Tuple[Edge, ...]
    outputs: Optional[Tuple[GroupElement, ...]] = None
    target: Optional[GroupDesc] = None
    _out: Dict[Tuple[int, str], int] = field(default=None, compare=False, repr=False, hash=False)
    _in: Dict[Tuple[int, str], int] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_out", {(u, s): i for i, (u, s, v) in enumerate(self.edges)})
        object.__setattr__(self, "_in", {(v, s): i for i, (u, s, v) in enumerate(self.edges)})

    @property
    def rank(self) -> int:
        return len(self.edges) - self.vertex_count + 1

    def is_trivial(self) -> bool:
        return not self.edges

    def same_subgroup(self, other: "CoreGraph") -> bool:
        return self.vertex_count == other.vertex_count and self.edges == other.edges

    def step(self, vertex: int, letter: Letter) -> Optional[Tuple[int, int]]:
        """Follow *letter* from *vertex*; returns (next vertex, edge index) or None."""
        symbol, sign = letter
        if sign > 0:
            index = self._out.get((vertex, symbol))
            return None if index is None else (self.edges[index][2], index)
        index = self._in.get((vertex, symbol))
        return None if index is None else (self.edges[index][0], index)

    def read(self, word: Sequence[Letter], start: int = BASE) -> Tuple[int, int]:
        """Read as much of *word* as possible; returns (vertex reached, letters consumed)."""
        vertex = start
        for consumed, letter in enumerate(word):
            moved = self.step(vertex, letter)
            if moved is None:
                return vertex, consumed
            vertex = moved[0]
        return vertex, len(word)

    def degree(self, vertex: int) -> int:
        return sum((u == vertex) + (v == vertex) for u, _, v in self.edges)

    def words_from_base(self) -> Dict[int, Word]:
        """ShortLex-least word read from the base to each vertex."""
        words: Dict[int, Word] = {BASE: ()}
        queue = [BASE]
        for vertex in queue:
            for letter in self.group.letters():
                moved = self.step(vertex, letter)
                if moved is not None and moved[0] not in words:
                    words[moved[0]] = words[vertex] + (letter,)
                    queue.append(moved[0])
        return words

    def words_to_base(self) -> Dict[int, Word]:
        """ShortLex-least word read from each vertex to the base along a geodesic."""
        distance = {vertex: len(word) for vertex, word in self.words_from_base().items()}
        best: Dict[int, Word] = {BASE: ()}
        for vertex in sorted(distance, key=lambda v: (distance[v], v)):
            if vertex == BASE:
                continue
            for letter in self.group.letters():
                moved = self.step(vertex, letter)
                if moved is not None and distance[moved[0]] == distance[vertex] - 1:
                    best[vertex] = (letter,) + best[moved[0]]
                    break
        return best


@dataclass(frozen=True)
class PullbackComponent:
    vertices: Tuple[Tuple[int, int], ...]
    edges: Tuple[Tuple[Tuple[int, int], str, Tuple[int, int]], ...]
    rank: int
    witness: GroupElement
    witness_vertex: Tuple[int, int]
    generators: Tuple[GroupElement, ...]  # generate H ∩ witness·K·witness⁻¹, as elements of H

    @property
    def contains_base(self) -> bool:
        return (BASE, BASE) in self.vertices


@dataclass(frozen=True)
class MalnormalVerdict:
    holds: bool
    witness: Optional[GroupElement] = None
    first: Optional[int] = None
    second: Optional[int] = None


@dataclass(frozen=True)
class TotalityVerdict:
    holds: bool
    witness: Optional[GroupElement] = None
    index: Optional[int] = None


# =======================================================================
# Folding


def _require_free(group: GroupDesc) -> None:
    if group.kind != GroupKind.FREE:
        raise NotFreeGroup(f"Core graphs need a free group; got a {group.kind.value} group")


def _as_word(group: GroupDesc, generator: Union[Word, GroupElement]) -> Word:
    if isinstance(generator, GroupElement):
        if generator.group != group:
            raise GroupMismatch(f"Generator {generator} is not in the free group on {group.symbols}")
        return generator.payload
    return reduce(group, generator).payload


def core_graph(group: GroupDesc, generators: Sequence[Union[Word, GroupElement]]) -> CoreGraph:
    _require_free(group)
    return _build_core(group, [(_as_word(group, g), None) for g in generators], None)


def transducer(group: GroupDesc, pairs: Sequence[Tuple[Union[Word, GroupElement], GroupElement]],
               target: GroupDesc) -> CoreGraph:
    """Core graph of the generators whose edges carry outputs in *target*; reading a loop multiplies them up."""
    _require_free(group)
    return _build_core(group, [(_as_word(group, w), out) for w, out in pairs], target)


def _build_core(group: GroupDesc, petals: Sequence[Tuple[Word, Optional[GroupElement]]],
                target: Optional[GroupDesc]) -> CoreGraph:
    edges: List[list] = []
    next_vertex = 1
    for word, output in petals:
        if not word:
            continue
        path = [BASE] + list(range(next_vertex, next_vertex + len(word) - 1)) + [BASE]
        next_vertex += len(word) - 1
        for i, (symbol, sign) in enumerate(word):
            out = identity(target) if target is not None else None
            if i == 0 and target is not None:
                out = output if sign > 0 else invert(output)
            if sign > 0:
                edges.append([path[i], symbol, path[i + 1], out])
            else:
                edges.append([path[i + 1], symbol, path[i], out])
    edges = _fold(edges, target is not None)
    return _canonical_core(group, edges, target)


def _fold(edges: List[list], with_outputs: bool) -> List[list]:
    while True:
        seen_out: Dict[Tuple[int, str], int] = {}
        seen_in: Dict[Tuple[int, str], int] = {}
        action = None
        for index, (u, symbol, v, _) in enumerate(edges):
            other = seen_out.get((u, symbol))
            if other is not None:
                action = ("out", other, index)
                break
            other = seen_in.get((v, symbol))
            if other is not None:
                action = ("in", other, index)
                break
            seen_out[(u, symbol)] = index
            seen_in[(v, symbol)] = index
        if action is None:
            return edges
        kind, first, second = action
        if kind == "out":
            keep_index, drop_index = sorted((first, second), key=lambda i: edges[i][2])
            keep, drop = edges[keep_index][2], edges[drop_index][2]
        else:
            keep_index, drop_index = sorted((first, second), key=lambda i: edges[i][0])
            keep, drop = edges[keep_index][0], edges[drop_index][0]
        if keep == drop:
            # parallel duplicate with the same label
            del edges[drop_index]
            continue
        if with_outputs:
            kept_out, dropped_out = edges[keep_index][3], edges[drop_index][3]
            if kind == "out":
                z = multiply(invert(dropped_out), kept_out)
            else:
                z = multiply(dropped_out, invert(kept_out))
            _gauge(edges, drop, z)
        for edge in edges:
            if edge[0] == drop:
                edge[0] = keep
            if edge[2] == drop:
                edge[2] = keep


def _gauge(edges: List[list], vertex: int, z: GroupElement) -> None:
    z_inverse = invert(z)
    for edge in edges:
        if edge[2] == vertex:
            edge[3] = multiply(edge[3], z)
        if edge[0] == vertex:
            edge[3] = multiply(z_inverse, edge[3])


def _canonical_core(group: GroupDesc, edges: List[list], target: Optional[GroupDesc]) -> CoreGraph:
    # trim hanging trees, never the base
    while True:
        degree: Dict[int, int] = {}
        for u, _, v, _ in edges:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        leaves = {vertex for vertex, d in degree.items() if d == 1 and vertex != BASE}
        if not leaves:
            break
        edges = [edge for edge in edges if edge[0] not in leaves and edge[2] not in leaves]
    out_map = {(u, s): (v, i) for i, (u, s, v, _) in enumerate(edges)}
    in_map = {(v, s): (u, i) for i, (u, s, v, _) in enumerate(edges)}
    numbering = {BASE: 0}
    queue = [BASE]
    for vertex in queue:
        for symbol, sign in group.letters():
            moved = out_map.get((vertex, symbol)) if sign > 0 else in_map.get((vertex, symbol))
            if moved is not None and moved[0] not in numbering:
                numbering[moved[0]] = len(numbering)
                queue.append(moved[0])
    renumbered = [((numbering[u], s, numbering[v]), out) for u, s, v, out in edges
                  if u in numbering and v in numbering]
    renumbered.sort(key=lambda item: (item[0][0], group.symbols.index(item[0][1]), item[0][2]))
    return CoreGraph(
        group=group,
        vertex_count=len(numbering),
        edges=tuple(edge for edge, _ in renumbered),
        outputs=tuple(out for _, out in renumbered) if target is not None else None,
        target=target,
    )


# =======================================================================
# Queries


def membership(core: CoreGraph, w: GroupElement) -> bool:
    if w.group != core.group:
        raise GroupMismatch(f"Element {w} is not in the free group on {core.group.symbols}")
    vertex, consumed = core.read(w.payload)
    return consumed == len(w.payload) and vertex == BASE


def transport(core: CoreGraph, w: Union[Word, GroupElement]) -> Optional[GroupElement]:
    """Product of the edge outputs along the loop read by w, or None if w is not a loop at the base."""
    word = w.payload if isinstance(w, GroupElement) else w
    if core.target is None:
        raise ValueError("transport needs a core graph built by transducer()")
    result = None
    vertex = BASE
    for letter in word:
        moved = core.step(vertex, letter)
        if moved is None:
            return None
        vertex, index = moved
        output = core.outputs[index] if letter[1] > 0 else invert(core.outputs[index])
        result = output if result is None else multiply(result, output)
    if vertex != BASE:
        return None
    if result is None:
        return identity(core.target)
    return result


def _loop_basis(group: GroupDesc, edges: Sequence[Tuple], root) -> List[Word]:
    """Free basis of the loops at *root* in a labeled graph: one loop per edge outside a BFS tree."""
    out_map: Dict[Tuple, List[int]] = {}
    in_map: Dict[Tuple, List[int]] = {}
    for index, (u, symbol, v) in enumerate(edges):
        out_map.setdefault((u, symbol), []).append(index)
        in_map.setdefault((v, symbol), []).append(index)
    paths: Dict = {root: ()}
    tree_edges = set()
    queue = [root]
    for vertex in queue:
        for symbol, sign in group.letters():
            lookup = out_map if sign > 0 else in_map
            for index in lookup.get((vertex, symbol), []):
                u, _, v = edges[index]
                other = v if sign > 0 else u
                if other not in paths:
                    paths[other] = paths[vertex] + ((symbol, sign),)
                    tree_edges.add(index)
                    queue.append(other)
    basis = []
    for index, (u, symbol, v) in enumerate(edges):
        if index in tree_edges:
            continue
        loop = reduce(group, paths[u] + ((symbol, 1),) + tuple(invert_word(paths[v])))
        basis.append(loop.payload)
    return basis


def subgroup_basis(core: CoreGraph) -> List[Word]:
    return _loop_basis(core.group, core.edges, BASE)


def pullback(c1: CoreGraph, c2: CoreGraph) -> List[PullbackComponent]:
    """Components of the fiber product with nontrivial loop subgroup, ordered by witness (ShortLex)."""
    if c1.group != c2.group:
        raise GroupMismatch("pullback needs core graphs over the same free group")
    group = c1.group
    by_symbol: Dict[str, List[Edge]] = {}
    for edge in c2.edges:
        by_symbol.setdefault(edge[1], []).append(edge)
    product_edges = []
    for u1, symbol, v1 in c1.edges:
        for u2, _, v2 in by_symbol.get(symbol, []):
            product_edges.append(((u1, u2), symbol, (v1, v2)))
    graph = nx.MultiGraph()
    for index, (u, _, v) in enumerate(product_edges):
        graph.add_edge(u, v, key=index)
    from_base_1 = c1.words_from_base()
    from_base_2 = c2.words_from_base()
    components = []
    for nodes in nx.connected_components(graph):
        component_edges = [edge for edge in product_edges if edge[0] in nodes]
        rank = len(component_edges) - len(nodes) + 1
        if rank < 1:
            continue
        witnesses = []
        for u1, u2 in nodes:
            element = reduce(group, from_base_1[u1] + tuple(invert_word(from_base_2[u2])))
            witnesses.append((shortlex_key(element), (u1, u2), element))
        _, witness_vertex, witness = min(witnesses)
        prefix = from_base_1[witness_vertex[0]]
        generators = tuple(
            reduce(group, prefix + loop + tuple(invert_word(prefix)))
            for loop in _loop_basis(group, component_edges, witness_vertex))
        components.append(PullbackComponent(
            vertices=tuple(sorted(nodes)),
            edges=tuple(sorted(component_edges)),
            rank=rank,
            witness=witness,
            witness_vertex=witness_vertex,
            generators=generators,
        ))
    components.sort(key=lambda c: shortlex_key(c.witness))
    return components


def intersection(c1: CoreGraph, c2: CoreGraph) -> CoreGraph:
    """Core graph of H ∩ K (the component through the pair of base vertices)."""
    for component in pullback(c1, c2):
        if component.contains_base:
            return core_graph(c1.group, component.generators)
    return core_graph(c1.group, [])


def conjugate(core: CoreGraph, g: GroupElement) -> CoreGraph:
    """Core graph of g·H·g⁻¹."""
    return core_graph(core.group, [multiply(multiply(g, reduce(core.group, w)), invert(g))
                                   for w in subgroup_basis(core)])


def is_malnormal_collection(cores: Sequence[CoreGraph]) -> MalnormalVerdict:
    for i, first in enumerate(cores):
        for j in range(i, len(cores)):
            for component in pullback(first, cores[j]):
                if i == j and component.contains_base:
                    continue
                logger.info(f"Malnormality fails for subgroups {i},{j} with conjugator {component.witness}")
                return MalnormalVerdict(False, component.witness, i, j)
    return MalnormalVerdict(True)


def is_total(h: CoreGraph, peripherals: Sequence[CoreGraph]) -> TotalityVerdict:
    for index, peripheral in enumerate(peripherals):
        if peripheral.is_trivial():
            continue
        for component in pullback(h, peripheral):
            meet = core_graph(h.group, component.generators)
            full = conjugate(peripheral, component.witness)
            if not meet.same_subgroup(full):
                return TotalityVerdict(False, component.witness, index)
    return TotalityVerdict(True)


def conjugate_into(h: CoreGraph, p: CoreGraph) -> Optional[GroupElement]:
    """Some g with H ≤ g·P·g⁻¹ (ShortLex-least over pullback witnesses), or None."""
    if h.is_trivial():
        return identity(h.group)
    for component in pullback(h, p):
        if core_graph(h.group, component.generators).same_subgroup(h):
            return component.witness
    return None


# =======================================================================
# Left cosets x·H


def coset_key(core: CoreGraph, x: GroupElement) -> Tuple[int, Word]:
    """Canonical key of x·H: the vertex reached reading x⁻¹ from the base and the unread remainder."""
    word = tuple(invert_word(x.payload))
    vertex, consumed = core.read(word)
    return vertex, word[consumed:]


def coset_representative(core: CoreGraph, x: GroupElement, to_base: Optional[Dict[int, Word]] = None) -> GroupElement:
    """ShortLex-least element of x·H."""
    vertex, remainder = coset_key(core, x)
    to_base = to_base if to_base is not None else core.words_to_base()
    return reduce(core.group, tuple(invert_word(remainder)) + to_base[vertex])
