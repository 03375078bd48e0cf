from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.utils import UnionFind

from src.graph_of_groups import (GraphOfGroups, Path, Step, arrival_end, departure_end, reverse_step)
from src.graph_of_groups_types import TamePresentationSpec
from src.group_kernel import (GroupElement, Word, element_word, enumerate_elements, format_word, identity,
                              invert_word, multiply, invert, parse_word, reduce, shortlex_key, word_length)
from src.subgroups import make_subgroup
from src.toolkit_errors import (DisconnectedSelection, IllegalPath, NotInWindow, SelectionOutsideWindow,
                                WindowTooSmall)

logger = logging.getLogger(__name__)

BASE_INDEX = 0


@dataclass(frozen=True)
class WindowParams:
    R: int
    L: int

    def __str__(self) -> str:
        return f"R={self.R}, L={self.L}"


@dataclass(frozen=True)
class TreeVertex:
    """
    The coset X·G_vertex for the canonical path X = r0 e1 r1 ... ek: every r is the ShortLex-least
    representative of its coset of the departing edge image. length is |X|: representative lengths
    plus one per stable letter.
    """
    index: int
    vertex: str
    reps: Tuple[GroupElement, ...]
    steps: Tuple[Step, ...]
    depth: int
    length: int
    parent: Optional[int]

    @property
    def key(self) -> Tuple:
        return self.steps, tuple(r.payload for r in self.reps)


@dataclass(frozen=True)
class TreeEdge:
    index: int
    parent: int
    child: int
    edge: str
    direction: int
    rep: GroupElement  # representative in the parent's vertex group

    @property
    def step(self) -> Step:
        return self.edge, self.direction


class TreeWindow:
    """Finite ball of the Bass-Serre tree; vertex 0 is the base coset 1·G_base."""

    def __init__(self, g: GraphOfGroups, params: WindowParams, vertices: Sequence[TreeVertex],
                 edges: Sequence[TreeEdge]):
        self.g = g
        self.params = params
        self.vertices: Tuple[TreeVertex, ...] = tuple(vertices)
        self.edges: Tuple[TreeEdge, ...] = tuple(edges)
        self._index = {v.key: v.index for v in self.vertices}
        self._parent_edge = {e.child: e for e in self.edges}
        self._between = {frozenset((e.parent, e.child)): e for e in self.edges}

    base = BASE_INDEX

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, index: int) -> TreeVertex:
        if not isinstance(index, int) or not 0 <= index < len(self.vertices):
            raise NotInWindow(f"tree vertex {index!r} is not in the window {self.params}")
        return self.vertices[index]

    def index_of(self, key: Tuple) -> Optional[int]:
        return self._index.get(key)

    def parent_edge(self, index: int) -> Optional[TreeEdge]:
        return self._parent_edge.get(index)

    def edge_between(self, a: int, b: int) -> Optional[TreeEdge]:
        return self._between.get(frozenset((a, b)))

    def children(self, index: int) -> List[TreeEdge]:
        return [e for e in self.edges if e.parent == index]

    def path(self, index: int) -> Path:
        tree_vertex = self.vertex(index)
        last = identity(self.g.vertices[tree_vertex.vertex].group)
        return Path(self.g.base, tree_vertex.reps + (last,), tree_vertex.steps)

    def word(self, index: int) -> Word:
        return self.g.word_of(self.path(index))

    def label(self, index: int) -> str:
        return f"{format_word(self.word(index))}·{self.vertex(index).vertex}"

    def as_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for v in self.vertices:
            graph.add_node(v.index, vertex=v.vertex, label=self.label(v.index), depth=v.depth)
        for e in self.edges:
            graph.add_edge(e.parent, e.child, edge=e.edge, index=e.index)
        return graph


@dataclass(frozen=True)
class StabilizerDescriptor:
    """The stabilizer g·G_vertex·g⁻¹ of a window vertex."""
    word: Word
    vertex: str
    path: Path
    graph: GraphOfGroups = field(repr=False, compare=False)

    def local(self, x: Union[str, Sequence]) -> Optional[GroupElement]:
        """g⁻¹xg as an element of G_vertex, or None if x does not stabilize the vertex."""
        g = self.graph
        loop = g.concat(g.concat(g.inverse(self.path), g.path_from_word(x)), self.path)
        form = g.britton(loop)
        return None if form.steps else form.syllables[0]

    def contains(self, x: Union[str, Sequence]) -> bool:
        return self.local(x) is not None


# =======================================================================
# Tame presentations


@dataclass(frozen=True)
class SelectedVertex:
    coset: Word
    vertex: str
    generators: Tuple[GroupElement, ...]


@dataclass(frozen=True)
class TamePresentation:
    """H given by selected tree vertices with generators of their stabilizers in H, and connecting elements."""
    id: str
    selected: Tuple[SelectedVertex, ...]
    connecting: Tuple[Word, ...] = ()

    def generator_words(self) -> List[Word]:
        """Generators of H as G-words: conjugated vertex generators, then the connecting elements."""
        words = []
        for s in self.selected:
            back = tuple(invert_word(s.coset))
            for h in s.generators:
                words.append(s.coset + element_word(h) + back)
        return words + list(self.connecting)


def tame_presentation(g: GraphOfGroups, spec: Union[TamePresentationSpec, str]) -> TamePresentation:
    """Parse a tame presentation from the input file (by id) or from its model."""
    if isinstance(spec, str):
        found = [p for p in g.spec.tame_presentations if p.id == spec]
        if not found:
            raise ValueError(f"Unknown tame presentation: {spec!r}")
        spec = found[0]
    selected = []
    for item in spec.selected:
        group = g.vertex(item.vertex).group
        generators = tuple(reduce(group, parse_word(text, group.symbols)) for text in item.generators)
        selected.append(SelectedVertex(g.parse(item.coset), item.vertex, generators))
    return TamePresentation(spec.id, tuple(selected), tuple(g.parse(text) for text in spec.connecting))


# =======================================================================
# Window construction


def build_tree_window(g: GraphOfGroups, R: int, L: int) -> TreeWindow:
    """
    Breadth-first enumeration from the base coset. Children of X are X·r·e± for ShortLex-least coset
    representatives r of the departing edge image, ordered by (ShortLex r, edge order, + before -).
    """
    if R < 0 or L < 1:
        raise ValueError(f"window needs R >= 0 and L >= 1; got R={R}, L={L}")
    longest = g.edge_image_length()
    if L < longest:
        raise WindowTooSmall(f"word window L={L} is shorter than the longest edge-image generator ({longest})")
    vertices = [TreeVertex(BASE_INDEX, g.base, (), (), 0, 0, None)]
    edges: List[TreeEdge] = []
    seen = {vertices[0].key}
    for parent in vertices:
        if parent.depth >= R:
            continue
        group = g.vertices[parent.vertex].group
        candidates = []
        for order, step in enumerate(g.departures(parent.vertex)):
            edge = g.edges[step[0]]
            cost = 0 if edge.in_tree else 1
            budget = L - parent.length - cost
            if budget < 0:
                continue
            leaving = edge.ends[departure_end(step)].image
            backtrack = bool(parent.steps) and parent.steps[-1] == reverse_step(step)
            cosets = set()
            for element in enumerate_elements(group, budget):
                key = leaving.coset_key(element)
                if key in cosets:
                    continue
                cosets.add(key)
                rep = leaving.coset_rep(element)
                if backtrack and rep.is_identity():
                    continue
                candidates.append((shortlex_key(rep), order, rep, step, cost))
        candidates.sort(key=lambda c: (c[0], c[1]))
        for _, _, rep, step, cost in candidates:
            child = TreeVertex(
                index=len(vertices),
                vertex=g.step_target(step),
                reps=parent.reps + (rep,),
                steps=parent.steps + (step,),
                depth=parent.depth + 1,
                length=parent.length + word_length(rep) + cost,
                parent=parent.index,
            )
            if child.length > L or child.key in seen:
                continue
            seen.add(child.key)
            vertices.append(child)
            edges.append(TreeEdge(len(edges), parent.index, child.index, step[0], step[1], rep))
    params = WindowParams(R, L)
    logger.info(f"Built tree window {params}: {len(vertices)} vertices, {len(edges)} edges")
    return TreeWindow(g, params, vertices, edges)


def locate(g: GraphOfGroups, w: TreeWindow, path: Path) -> Optional[int]:
    """Window index of the coset named by a path from the base, or None outside the window."""
    if path.start != g.base:
        raise IllegalPath(f"coset paths start at the base vertex {g.base!r}; got {path.start!r}")
    form = g.canonical_form(path)
    return w.index_of((form.steps, tuple(s.payload for s in form.syllables[:-1])))


def act(g: GraphOfGroups, w: TreeWindow, x: Union[str, Sequence], index: int) -> Optional[int]:
    """x·X for a window vertex X; None when the image leaves the window."""
    return locate(g, w, g.concat(g.path_from_word(x), w.path(w.vertex(index).index)))


def vertex_stabilizer(w: TreeWindow, index: int) -> StabilizerDescriptor:
    tree_vertex = w.vertex(index)
    return StabilizerDescriptor(w.word(index), tree_vertex.vertex, w.path(index), w.g)


# =======================================================================
# Minimal subtree


@dataclass(frozen=True)
class SplittingVertex:
    orbit: int
    tree_vertex: int
    vertex: str
    generators: Tuple[GroupElement, ...]


@dataclass(frozen=True)
class SplittingEdge:
    orbit: int
    tree_edge: int
    source_orbit: int
    target_orbit: int
    vertex: str  # vertex group holding the generators
    generators: Tuple[GroupElement, ...]


@dataclass(frozen=True)
class InducedSplitting:
    vertices: Tuple[SplittingVertex, ...]
    edges: Tuple[SplittingEdge, ...]
    nontrivial_orbits: int


@dataclass(frozen=True)
class SubtreeWindow:
    """
    In-window part of the minimal H-subtree. translators maps each orbit vertex X to (u, i)
    with X = u·S_i for the selected vertex S_i.
    """
    window: TreeWindow
    vertices: Tuple[int, ...]
    edges: Tuple[int, ...]
    selected: Tuple[int, ...]
    translators: Dict[int, Tuple[Word, int]]
    orbit_of: Dict[int, int]


def _moves(h: TamePresentation) -> List[Word]:
    moves = []
    for word in h.generator_words():
        for candidate in (word, tuple(invert_word(word))):
            if candidate not in moves:
                moves.append(candidate)
    return moves


def local_offset(g: GraphOfGroups, w: TreeWindow, h: TamePresentation, index: int, u: Word,
                 selected: int) -> Optional[GroupElement]:
    """g_X⁻¹·u·g_i in G_v, where X = u·S_i and g_X is the canonical word of X."""
    chosen = h.selected[selected]
    loop = g.concat(g.concat(g.inverse(w.path(index)), g.path_from_word(u)),
                    g.coset_path(chosen.coset, chosen.vertex))
    form = g.britton(loop)
    if form.steps:
        logger.warning(f"Translator {format_word(u)} does not carry selected vertex {selected} to tree vertex {index}")
        return None
    return form.syllables[0]


def local_generators(g: GraphOfGroups, w: TreeWindow, h: TamePresentation, subtree: SubtreeWindow,
                     index: int) -> Optional[List[GroupElement]]:
    """Generators of H ∩ Stab(X) in G_v coordinates for an orbit vertex X, else None."""
    if index not in subtree.translators:
        return None
    u, selected = subtree.translators[index]
    offset = local_offset(g, w, h, index, u, selected)
    if offset is None:
        return None
    inverse = invert(offset)
    return [multiply(multiply(offset, x), inverse) for x in h.selected[selected].generators]


def minimal_subtree_and_splitting(w: TreeWindow, h: TamePresentation) -> Tuple[SubtreeWindow, InducedSplitting]:
    """
    T_H: hull of the in-window H-orbit closure of the selected vertices under the generators of H.
    The induced splitting has one vertex per in-window orbit and one edge per orbit of hull edges.
    """
    g = w.g
    selected_indices = []
    for position, chosen in enumerate(h.selected):
        index = locate(g, w, g.coset_path(chosen.coset, chosen.vertex))
        if index is None:
            raise SelectionOutsideWindow(f"selected vertex {position} ({format_word(chosen.coset)}·"
                                         f"{chosen.vertex}) is outside the window {w.params}")
        selected_indices.append(index)
    for word in h.connecting:
        if all(act(g, w, word, index) is None for index in selected_indices):
            raise DisconnectedSelection(f"connecting element {format_word(word)} maps no selected vertex "
                                        f"into the window {w.params}")
    moves = _moves(h)
    translators: Dict[int, Tuple[Word, int]] = {}
    for position, index in enumerate(selected_indices):
        translators.setdefault(index, ((), position))
    queue = list(translators)
    for index in queue:
        u, position = translators[index]
        for move in moves:
            image = act(g, w, move, index)
            if image is not None and image not in translators:
                translators[image] = (move + u, position)
                queue.append(image)

    tree = w.as_networkx()
    root = min(translators)
    hull = {root}
    for index in sorted(translators):
        hull.update(nx.shortest_path(tree, root, index))
    hull_edges = sorted(w.edge_between(a, b).index for a, b in tree.subgraph(hull).edges)

    vertex_classes = UnionFind(sorted(hull))
    edge_classes = UnionFind(hull_edges)
    images: Dict[Tuple[str, int], Optional[int]] = {}

    def moved(move: Word, index: int) -> Optional[int]:
        key = (format_word(move), index)
        if key not in images:
            images[key] = act(g, w, move, index)
        return images[key]

    for index in sorted(hull):
        for move in moves:
            image = moved(move, index)
            if image in hull:
                vertex_classes.union(index, image)
    for edge_index in hull_edges:
        edge = w.edges[edge_index]
        for move in moves:
            a, b = moved(move, edge.parent), moved(move, edge.child)
            if a in hull and b in hull:
                image = w.edge_between(a, b)
                if image is not None:
                    edge_classes.union(edge_index, image.index)

    orbit_of: Dict[int, int] = {}
    vertex_orbits = sorted((sorted(members) for members in vertex_classes.to_sets()), key=lambda m: m[0])
    for orbit, members in enumerate(vertex_orbits):
        for index in members:
            orbit_of[index] = orbit

    subtree = SubtreeWindow(w, tuple(sorted(hull)), tuple(hull_edges), tuple(selected_indices), translators, orbit_of)

    splitting_vertices = []
    for orbit, members in enumerate(vertex_orbits):
        representative = next((i for i in members if i in selected_indices), members[0])
        generators = local_generators(g, w, h, subtree, representative) or []
        splitting_vertices.append(SplittingVertex(orbit, representative, w.vertex(representative).vertex,
                                                  tuple(x for x in generators if not x.is_identity())))
    splitting_edges = []
    edge_orbits = sorted((sorted(members) for members in edge_classes.to_sets()), key=lambda m: m[0])
    for orbit, members in enumerate(edge_orbits):
        edge = w.edges[members[0]]
        vertex, generators = _edge_generators(g, w, h, subtree, edge)
        splitting_edges.append(SplittingEdge(orbit, edge.index, orbit_of[edge.parent], orbit_of[edge.child],
                                             vertex, tuple(generators)))
    nontrivial = sum(1 for v in splitting_vertices if v.generators)
    logger.info(f"Minimal subtree on {w.params}: {len(hull)} vertices, {len(vertex_orbits)} orbits, "
                f"{nontrivial} nontrivially stabilized")
    return subtree, InducedSplitting(tuple(splitting_vertices), tuple(splitting_edges), nontrivial)


def _edge_generators(g: GraphOfGroups, w: TreeWindow, h: TamePresentation, subtree: SubtreeWindow,
                     edge: TreeEdge) -> Tuple[str, List[GroupElement]]:
    """H ∩ Stab(edge), read at whichever endpoint lies in the orbit closure."""
    graph_edge = g.edges[edge.edge]
    for index in (edge.parent, edge.child):
        local = local_generators(g, w, h, subtree, index)
        if local is None:
            continue
        tree_vertex = w.vertex(index)
        group = g.vertices[tree_vertex.vertex].group
        if index == edge.parent:
            stabilizer = graph_edge.ends[departure_end(edge.step)].image.conjugate(edge.rep)
        else:
            stabilizer = graph_edge.ends[arrival_end(edge.step)].image
        meet = make_subgroup(group, local).intersection(stabilizer)
        return tree_vertex.vertex, [x for x in meet.generators if not x.is_identity()]
    return w.vertex(edge.parent).vertex, []
