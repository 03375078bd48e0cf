from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from src.graph_of_groups_types import (EDGE_ENDS, END_FROM, END_TO, TRIVIAL_PERIPHERAL, EdgeSpec,
                                       GraphOfGroupsSpec)
from src.group_kernel import (GroupDesc, GroupElement, GroupKind, Homomorphism, Word, all_elements, element_word,
                              format_word, identity, integer_echelon, invert, invert_word, letter_element, multiply,
                              parse_word, power, reduce, relation_rows, vector_element, word_length)
from src.stallings import MalnormalVerdict, TotalityVerdict, core_graph, transducer, transport
from src.subgroups import Subgroup, almost_malnormal_collection, make_subgroup, whole_group
from src.toolkit_errors import (ContainerViolation, DisconnectedGraph, IllegalPath, InjectionNotMono, UnknownSymbol,
                                UnknownVertex)

logger = logging.getLogger(__name__)

# A step traverses an edge: +1 goes from -> to, -1 goes to -> from.
# Relation convention for an edge e with generator c: from_map(c)·e = e·to_map(c).
Step = Tuple[str, int]


def reverse_step(step: Step) -> Step:
    return step[0], -step[1]


def departure_end(step: Step) -> str:
    return END_FROM if step[1] > 0 else END_TO


def arrival_end(step: Step) -> str:
    return END_TO if step[1] > 0 else END_FROM


@dataclass(frozen=True)
class Path:
    """
    s0 e1 s1 ... ek sk: syllables alternate with edge steps along a path in the underlying graph.
    Loops at the base vertex are elements of G; other paths name cosets.
    """
    start: str
    syllables: Tuple[GroupElement, ...]
    steps: Tuple[Step, ...] = ()

    def __post_init__(self):
        if len(self.syllables) != len(self.steps) + 1:
            raise IllegalPath(f"path needs one more syllable than steps; got {len(self.syllables)} and {len(self.steps)}")

    def is_empty(self) -> bool:
        return not self.steps and self.syllables[0].is_identity()


class NormalForm(Path):
    """A path without pinches."""


@dataclass(frozen=True)
class Peripheral:
    id: str
    vertex: str
    words: Tuple[Word, ...]
    subgroup: Subgroup

    @property
    def declared(self) -> bool:
        return self.id != TRIVIAL_PERIPHERAL


@dataclass(frozen=True)
class Vertex:
    id: str
    group: GroupDesc
    peripherals: Dict[str, Peripheral]  # declared peripherals in input order, then the trivial one

    @property
    def declared_peripherals(self) -> List[Peripheral]:
        return [p for p in self.peripherals.values() if p.declared]


class EdgeEnd:
    """One end of an edge: the injection of the edge group into the vertex group at that end."""

    def __init__(self, edge_id: str, end: str, vertex: str, edge_group: GroupDesc, vertex_group: GroupDesc,
                 homomorphism: Homomorphism, container: Optional[str]):
        self.edge_id = edge_id
        self.end = end
        self.vertex = vertex
        self.edge_group = edge_group
        self.vertex_group = vertex_group
        self.homomorphism = homomorphism
        self.container = container

    @property
    def generator_images(self) -> List[GroupElement]:
        return list(self.homomorphism.images)

    @cached_property
    def image(self) -> Subgroup:
        return make_subgroup(self.vertex_group, self.generator_images)

    def push(self, c: GroupElement) -> GroupElement:
        return self.homomorphism.apply(c)

    def pull(self, x: GroupElement) -> Optional[GroupElement]:
        """The edge group element mapping to x, or None if x is not in the image."""
        return self._pull(x)

    @cached_property
    def _pull(self) -> Callable[[GroupElement], Optional[GroupElement]]:
        source, target = self.edge_group, self.vertex_group
        generators = [letter_element(source, (symbol, 1)) for symbol in source.symbols]
        if source.is_finite:
            table = {self.push(c).payload: c for c in all_elements(source)}
            return lambda x: table.get(x.payload)
        if target.kind == GroupKind.FREE:
            core = transducer(target, [(self.push(c), c) for c in generators], source)
            return lambda x: transport(core, x)
        rows = [tuple(image.payload) for image in self.generator_images] + relation_rows(target)
        echelon = integer_echelon(rows, len(target.symbols), track=True)

        def solve(x: GroupElement) -> Optional[GroupElement]:
            remainder, quotients = echelon.reduce(x.payload)
            if any(remainder):
                return None
            result = identity(source)
            for i, c in enumerate(generators):
                coefficient = sum(q * echelon.transform[j][i] for j, q in enumerate(quotients))
                result = multiply(result, power(c, coefficient))
            return result

        return solve

    def injection_failure(self) -> Optional[str]:
        """None if the map is a well-defined monomorphism, else the reason."""
        reason = self.homomorphism.well_definedness_failure()
        if reason:
            return reason
        source, target = self.edge_group, self.vertex_group
        if source.is_finite:
            seen = {}
            for c in all_elements(source):
                image = self.push(c).payload
                if image in seen:
                    return f"{seen[image]} and {c} have the same image"
                seen[image] = c
            return None
        if target.is_finite:
            return "an infinite edge group cannot embed in a finite vertex group"
        if target.kind == GroupKind.FREE:
            if source.kind == GroupKind.ABELIAN and (source.torsion or len(source.symbols) > 1):
                return "only infinite cyclic abelian groups embed in a free group"
            if any(image.is_identity() for image in self.generator_images):
                return "a generator maps to the identity"
            core = core_graph(target, self.generator_images)
            if core.rank != len(source.symbols):
                return f"the image has rank {core.rank} but the edge group has rank {len(source.symbols)}"
            return None
        # abelian target
        if source.kind == GroupKind.FREE:
            if len(source.symbols) > 1:
                return "a non-abelian free group cannot embed in an abelian group"
            image = self.generator_images[0]
            if not any(image.payload[:target.rank]):
                return "the generator maps to an element of finite order"
            return None
        rows = [tuple(image.payload) for image in self.generator_images] + relation_rows(target)
        echelon = integer_echelon(rows, len(target.symbols), track=True)
        for combination in echelon.kernel:
            kernel_element = vector_element(source, combination[:len(source.symbols)])
            if not kernel_element.is_identity():
                return f"{kernel_element} is in the kernel"
        return None


@dataclass(frozen=True)
class Edge:
    id: str
    group: GroupDesc
    source: str
    target: str
    ends: Dict[str, EdgeEnd]
    stable_letter: Optional[str]
    in_tree: bool

    def endpoint(self, end: str) -> str:
        return self.source if end == END_FROM else self.target


# =======================================================================
# Validation report


@dataclass(frozen=True)
class EdgeEndReport:
    edge: str
    end: str
    vertex: str
    container: Optional[str]
    parabolic: bool
    maximal: bool
    total: TotalityVerdict


@dataclass(frozen=True)
class VertexReport:
    vertex: str
    peripherals_malnormal: MalnormalVerdict
    edge_images_malnormal: MalnormalVerdict


@dataclass(frozen=True)
class ValidationReport:
    ends: Tuple[EdgeEndReport, ...]
    vertices: Tuple[VertexReport, ...]

    def end(self, edge: str, end: str) -> EdgeEndReport:
        return next(r for r in self.ends if r.edge == edge and r.end == end)

    def vertex(self, vertex: str) -> VertexReport:
        return next(r for r in self.vertices if r.vertex == vertex)


# =======================================================================


class GraphOfGroups:
    """
    A finite graph of groups with declared peripheral families.
    Elements of G are loops at the base vertex (the first declared vertex);
    vertex generators and stable letters form one global alphabet for G-words.
    """

    def __init__(self, spec: GraphOfGroupsSpec):
        self.spec = spec
        self.base = next(iter(spec.vertices))
        self.vertices: Dict[str, Vertex] = {}
        self.symbol_owner: Dict[str, Tuple[str, str]] = {}
        for vertex_id, vertex_spec in spec.vertices.items():
            group = vertex_spec.group.to_desc()
            peripherals: Dict[str, Peripheral] = {}
            for peripheral in vertex_spec.peripherals:
                words = tuple(parse_word(text, group.symbols) for text in peripheral.generators)
                elements = [reduce(group, word) for word in words]
                peripherals[peripheral.id] = Peripheral(peripheral.id, vertex_id, words, make_subgroup(group, elements))
            peripherals[TRIVIAL_PERIPHERAL] = Peripheral(TRIVIAL_PERIPHERAL, vertex_id, (), make_subgroup(group, []))
            self.vertices[vertex_id] = Vertex(vertex_id, group, peripherals)
            for symbol in group.symbols:
                self.symbol_owner[symbol] = ("vertex", vertex_id)
        self.tree_edges = frozenset(spec.spanning_tree)
        self.edges: Dict[str, Edge] = {}
        for edge_id, edge_spec in spec.edges.items():
            self.edges[edge_id] = self._build_edge(edge_id, edge_spec)
            if edge_spec.stable_letter:
                self.symbol_owner[edge_spec.stable_letter] = ("edge", edge_id)
        self.alphabet: Tuple[str, ...] = tuple(self.symbol_owner)
        self.validated = False

    def _build_edge(self, edge_id: str, edge_spec: EdgeSpec) -> Edge:
        edge_group = edge_spec.group.to_desc()
        ends = {}
        for end in EDGE_ENDS:
            vertex_id = edge_spec.endpoint(end)
            vertex_group = self.vertices[vertex_id].group
            mapping = edge_spec.injection_map(end)
            images = tuple(reduce(vertex_group, parse_word(mapping[symbol], vertex_group.symbols))
                           for symbol in edge_group.symbols)
            homomorphism = Homomorphism(edge_group, vertex_group, images)
            ends[end] = EdgeEnd(edge_id, end, vertex_id, edge_group, vertex_group, homomorphism,
                                edge_spec.container(end))
        return Edge(edge_id, edge_group, edge_spec.source, edge_spec.target, ends, edge_spec.stable_letter,
                    edge_id in self.tree_edges)

    # -------------------------------------------------------------------
    # Underlying graph

    def vertex(self, vertex_id: str) -> Vertex:
        if vertex_id not in self.vertices:
            raise UnknownVertex(vertex_id)
        return self.vertices[vertex_id]

    def peripheral(self, vertex_id: str, peripheral_id: str) -> Peripheral:
        return self.vertex(vertex_id).peripherals[peripheral_id]

    def step_source(self, step: Step) -> str:
        edge = self.edges[step[0]]
        return edge.source if step[1] > 0 else edge.target

    def step_target(self, step: Step) -> str:
        edge = self.edges[step[0]]
        return edge.target if step[1] > 0 else edge.source

    def ends_at(self, vertex_id: str) -> List[EdgeEnd]:
        """Edge ends located at a vertex, in edge order (from before to)."""
        return [edge.ends[end] for edge in self.edges.values() for end in EDGE_ENDS
                if edge.endpoint(end) == vertex_id]

    def departures(self, vertex_id: str) -> List[Step]:
        """Steps leaving a vertex, in edge order (+1 before -1)."""
        steps = []
        for edge in self.edges.values():
            if edge.source == vertex_id:
                steps.append((edge.id, 1))
            if edge.target == vertex_id:
                steps.append((edge.id, -1))
        return steps

    def underlying_graph(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.vertices)
        for edge in self.edges.values():
            graph.add_edge(edge.source, edge.target, key=edge.id)
        return graph

    @cached_property
    def _tree_steps_from_base(self) -> Dict[str, List[Step]]:
        paths = {self.base: []}
        queue = [self.base]
        for vertex_id in queue:
            for step in self.departures(vertex_id):
                if step[0] not in self.tree_edges:
                    continue
                other = self.step_target(step)
                if other not in paths:
                    paths[other] = paths[vertex_id] + [step]
                    queue.append(other)
        return paths

    def tree_steps(self, u: str, v: str) -> List[Step]:
        """Steps of the spanning-tree path from u to v."""
        to_u, to_v = self._tree_steps_from_base[u], self._tree_steps_from_base[v]
        common = 0
        while common < min(len(to_u), len(to_v)) and to_u[common] == to_v[common]:
            common += 1
        return [reverse_step(step) for step in reversed(to_u[common:])] + to_v[common:]

    # -------------------------------------------------------------------
    # Words and paths

    def parse(self, text: str) -> Word:
        return tuple(parse_word(text, self.alphabet))

    def path_from_word(self, word: Union[str, Sequence], start: Optional[str] = None) -> Path:
        """
        Path of a G-word read at *start* (default the base): vertex letters are read in the
        standard copy of their vertex group, reached along the spanning tree.
        """
        if isinstance(word, str):
            word = self.parse(word)
        start = start or self.base
        current = start
        syllables = [identity(self.vertex(start).group)]
        steps: List[Step] = []

        def walk(steps_to_take: List[Step]) -> None:
            nonlocal current
            for step in steps_to_take:
                steps.append(step)
                current = self.step_target(step)
                syllables.append(identity(self.vertices[current].group))

        for symbol, sign in word:
            if symbol not in self.symbol_owner:
                raise UnknownSymbol(symbol)
            kind, owner = self.symbol_owner[symbol]
            if kind == "vertex":
                walk(self.tree_steps(current, owner))
                syllables[-1] = multiply(syllables[-1], letter_element(self.vertices[owner].group, (symbol, sign)))
            else:
                step = (owner, sign)
                walk(self.tree_steps(current, self.step_source(step)))
                walk([step])
        walk(self.tree_steps(current, start))
        return Path(start, tuple(syllables), tuple(steps))

    def tree_path(self, u: str, v: str) -> Path:
        steps = self.tree_steps(u, v)
        syllables = [identity(self.vertices[u].group)] + [identity(self.vertices[self.step_target(s)].group)
                                                          for s in steps]
        return Path(u, tuple(syllables), tuple(steps))

    def coset_path(self, word: Union[str, Sequence], vertex: str) -> Path:
        """Path from the base naming the coset g·G_vertex of the Bass-Serre tree."""
        return self.concat(self.path_from_word(word), self.tree_path(self.base, self.vertex(vertex).id))

    def check_path(self, path: Path) -> None:
        current = path.start
        if current not in self.vertices:
            raise IllegalPath(f"path starts at unknown vertex {current!r}")
        for index, syllable in enumerate(path.syllables):
            if syllable.group != self.vertices[current].group:
                raise IllegalPath(f"syllable {index} ({syllable}) is not in the group of vertex {current!r}")
            if index < len(path.steps):
                step = path.steps[index]
                if step[0] not in self.edges or step[1] not in (1, -1):
                    raise IllegalPath(f"unknown edge step {step!r}")
                if self.step_source(step) != current:
                    raise IllegalPath(f"step {step!r} does not leave vertex {current!r}")
                current = self.step_target(step)

    def end_vertex(self, path: Path) -> str:
        return self.step_target(path.steps[-1]) if path.steps else path.start

    def as_path(self, raw: Union[str, Sequence, Path], start: Optional[str] = None) -> Path:
        if isinstance(raw, Path):
            self.check_path(raw)
            return raw
        return self.path_from_word(raw, start)

    def concat(self, first: Path, second: Path) -> Path:
        if self.end_vertex(first) != second.start:
            raise IllegalPath(f"cannot concatenate a path ending at {self.end_vertex(first)!r} "
                              f"with one starting at {second.start!r}")
        joint = multiply(first.syllables[-1], second.syllables[0])
        return Path(first.start, first.syllables[:-1] + (joint,) + second.syllables[1:], first.steps + second.steps)

    def inverse(self, path: Path) -> Path:
        return Path(self.end_vertex(path), tuple(invert(s) for s in reversed(path.syllables)),
                    tuple(reverse_step(step) for step in reversed(path.steps)))

    def word_of(self, path: Path) -> Word:
        """G-word of a path: syllable words and stable letters (tree edges are trivial)."""
        letters: List = []
        for index, syllable in enumerate(path.syllables):
            letters.extend(element_word(syllable))
            if index < len(path.steps):
                edge = self.edges[path.steps[index][0]]
                if not edge.in_tree:
                    letters.append((edge.stable_letter, path.steps[index][1]))
        return tuple(letters)

    # -------------------------------------------------------------------
    # Reduction

    def britton(self, path: Path) -> NormalForm:
        syllables = [path.syllables[0]]
        steps: List[Step] = []
        for step, syllable in zip(path.steps, path.syllables[1:]):
            if steps and steps[-1] == reverse_step(step):
                previous = steps[-1]
                edge = self.edges[previous[0]]
                c = edge.ends[arrival_end(previous)].pull(syllables[-1])
                if c is not None:
                    syllables.pop()
                    steps.pop()
                    carried = edge.ends[departure_end(previous)].push(c)
                    syllables[-1] = multiply(multiply(syllables[-1], carried), syllable)
                    continue
            steps.append(step)
            syllables.append(syllable)
        return NormalForm(path.start, tuple(syllables), tuple(steps))

    def transversal_normalize(self, path: NormalForm) -> NormalForm:
        """Each syllable before a step becomes the ShortLex-least representative of its coset of the departing image."""
        syllables = list(path.syllables)
        for index, step in enumerate(path.steps):
            edge = self.edges[step[0]]
            leaving = edge.ends[departure_end(step)]
            representative = leaving.image.coset_rep(syllables[index])
            c = leaving.pull(multiply(invert(representative), syllables[index]))
            syllables[index] = representative
            syllables[index + 1] = multiply(edge.ends[arrival_end(step)].push(c), syllables[index + 1])
        return NormalForm(path.start, tuple(syllables), path.steps)

    def canonical_form(self, raw: Union[str, Sequence, Path], start: Optional[str] = None) -> NormalForm:
        return self.transversal_normalize(self.britton(self.as_path(raw, start)))

    def is_trivial(self, raw: Union[str, Sequence, Path]) -> bool:
        return self.britton(self.as_path(raw)).is_empty()

    def same_element(self, x: Union[str, Sequence], y: Union[str, Sequence]) -> bool:
        x_word = self.parse(x) if isinstance(x, str) else tuple(x)
        y_word = self.parse(y) if isinstance(y, str) else tuple(y)
        return self.is_trivial(tuple(invert_word(x_word)) + y_word)

    def format(self, word: Union[Word, Path]) -> str:
        return format_g_word(self, word)

    # -------------------------------------------------------------------

    def edge_image_length(self) -> int:
        """Length of the longest edge-image generator."""
        lengths = [word_length(image) for edge in self.edges.values() for end in edge.ends.values()
                   for image in end.generator_images]
        return max(lengths, default=0)

    def undeclared_ends(self) -> List[EdgeEnd]:
        return [end for edge in self.edges.values() for end in edge.ends.values() if end.container is None]

    def container_of(self, edge_end: EdgeEnd) -> Optional[Peripheral]:
        if edge_end.container is None:
            return None
        return self.vertices[edge_end.vertex].peripherals[edge_end.container]


# =======================================================================
# Module level operations


def format_g_word(g: GraphOfGroups, word: Union[Word, Path]) -> str:
    if isinstance(word, Path):
        word = g.word_of(word)
    return format_word(word)


def element_of_path(g: GraphOfGroups, path: Path) -> Word:
    return g.word_of(path)


def normal_form(g: GraphOfGroups, raw: Union[str, Sequence, Path], start: Optional[str] = None) -> NormalForm:
    """Britton reduction: a path without pinches representing the same element."""
    return g.britton(g.as_path(raw, start))


def validate(g: GraphOfGroups) -> ValidationReport:
    """
    Check connectivity, spanning tree, monomorphisms and declared containers, then report per edge end
    whether it is parabolic, maximal in its container and total, and per vertex whether the peripheral
    family and the edge-image family are almost malnormal.
    """
    graph = g.underlying_graph()
    if not nx.is_connected(graph):
        raise DisconnectedGraph(f"underlying graph has {nx.number_connected_components(graph)} components")
    tree = nx.MultiGraph()
    tree.add_nodes_from(g.vertices)
    tree.add_edges_from((g.edges[e].source, g.edges[e].target) for e in g.tree_edges)
    if not nx.is_tree(tree):
        raise DisconnectedGraph(f"spanning_tree {sorted(g.tree_edges)} is not a spanning tree of the underlying graph")

    end_reports = []
    for edge in g.edges.values():
        for end in EDGE_ENDS:
            edge_end = edge.ends[end]
            reason = edge_end.injection_failure()
            if reason:
                raise InjectionNotMono(edge.id, end, reason)
            container = None
            if edge_end.container is not None:
                vertex = g.vertices[edge_end.vertex]
                if edge_end.container not in vertex.peripherals:
                    raise ContainerViolation(edge.id, end, f"vertex {vertex.id!r} has no peripheral {edge_end.container!r}")
                container = vertex.peripherals[edge_end.container]
                outside = [image for image in edge_end.generator_images if not container.subgroup.contains(image)]
                if outside:
                    raise ContainerViolation(edge.id, end, f"{outside[0]} is not in {container.id!r}")
            declared = [p.subgroup for p in g.vertices[edge_end.vertex].declared_peripherals]
            end_reports.append(EdgeEndReport(
                edge=edge.id,
                end=end,
                vertex=edge_end.vertex,
                container=edge_end.container,
                parabolic=container is not None,
                maximal=container is not None and container.subgroup.equals(edge_end.image),
                total=edge_end.image.is_total_relative(declared),
            ))
    vertex_reports = []
    for vertex in g.vertices.values():
        images = [end.image for end in g.ends_at(vertex.id) if not end.image.is_finite()]
        vertex_reports.append(VertexReport(
            vertex=vertex.id,
            peripherals_malnormal=almost_malnormal_collection([p.subgroup for p in vertex.declared_peripherals]),
            edge_images_malnormal=almost_malnormal_collection(images),
        ))
    g.validated = True
    logger.info(f"Validated graph of groups: {len(g.vertices)} vertices, {len(g.edges)} edges")
    return ValidationReport(tuple(end_reports), tuple(vertex_reports))


def vertex_generators(g: GraphOfGroups, global_gens: Sequence[Union[str, Word]], v: str) -> List[GroupElement]:
    """
    Generators of G_v: edge-image generators at v plus the nontrivial v-syllables of the normal forms
    of the global generators. They generate G_v whenever global_gens generate G.
    """
    vertex = g.vertex(v)
    found: List[GroupElement] = []

    def add(element: GroupElement) -> None:
        if not element.is_identity() and element not in found:
            found.append(element)

    for edge_end in g.ends_at(v):
        for image in edge_end.generator_images:
            add(image)
    for generator in global_gens:
        form = normal_form(g, generator)
        current = form.start
        for index, syllable in enumerate(form.syllables):
            if current == vertex.id:
                add(syllable)
            if index < len(form.steps):
                current = g.step_target(form.steps[index])
    return found


def whole_vertex_group(g: GraphOfGroups, v: str) -> Subgroup:
    return whole_group(g.vertex(v).group)
