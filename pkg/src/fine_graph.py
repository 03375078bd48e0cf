from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from src.bass_serre import BASE_INDEX, TreeWindow, WindowParams, locate
from src.graph_of_groups import (EdgeEnd, GraphOfGroups, Peripheral, arrival_end, departure_end)
from src.group_kernel import (GroupDesc, GroupElement, GroupKind, Word, all_elements, element_word, enumerate_elements,
                              format_word, free_reduce, identity, invert_word, letter_element, multiply)
from src.subgroups import INDEX_SEARCH_BOUND, Subgroup, almost_malnormal_collection, whole_group
from src.toolkit_errors import (DisconnectedGraph, EmptySubgraph, HypothesisFailure, PeripheralNotMalnormal,
                                TruncationWarning, UnsupportedVertexGroup)

logger = logging.getLogger(__name__)

POINT = ("pt",)

KIND_ELEMENT = "element"
KIND_CONE = "cone"
KIND_POINT = "point"
KIND_PORT = "port"

EDGE_VERTEX_SPACE = "vertex"
EDGE_EDGE_SPACE = "edge"


@dataclass(frozen=True)
class VertexFineGraph:
    """
    A (G_v; P_v)-graph window. Local nodes: ("g", payload) elements, ("c", peripheral id, coset key) cones,
    or the single POINT when a declared peripheral is all of G_v.
    """
    vertex: str
    kind: str  # "cayley" | "finite" | "singleton"
    radius: int
    group: GroupDesc
    graph: nx.Graph = field(compare=False)
    peripherals: Dict[str, Peripheral] = field(compare=False, repr=False)

    @property
    def is_singleton(self) -> bool:
        return self.kind == "singleton"

    def origin(self) -> Hashable:
        if self.is_singleton:
            return POINT
        return "g", identity(self.group).payload

    def chosen(self, peripheral_id: str, rep: GroupElement) -> Hashable:
        """Chosen vertex of the coset rep·P: the point, the element itself for trivial P, else the cone."""
        if self.is_singleton:
            return POINT
        subgroup = self.peripherals[peripheral_id].subgroup
        if subgroup.is_trivial():
            return "g", rep.payload
        return "c", peripheral_id, subgroup.coset_key(rep)


def build_vertex_graph(v: str, g: GraphOfGroups, L: int, check_malnormal: bool = True) -> VertexFineGraph:
    """Coned-off Cayley window of radius L (full Cayley graph for finite G_v, a point when G_v is peripheral)."""
    vertex = g.vertex(v)
    group = vertex.group
    declared = vertex.declared_peripherals
    if group.kind == GroupKind.FREE and declared and check_malnormal:
        verdict = almost_malnormal_collection([p.subgroup for p in declared])
        if not verdict.holds:
            raise PeripheralNotMalnormal(v, verdict.witness, declared[verdict.first].id, declared[verdict.second].id)
    graph = nx.Graph()
    everything = whole_group(group)
    if any(p.subgroup.contains_subgroup(everything) for p in declared):
        graph.add_node(POINT, kind=KIND_POINT, label=v)
        return VertexFineGraph(v, "singleton", L, group, graph, vertex.peripherals)
    if group.is_finite:
        elements, kind = all_elements(group), "finite"
    elif group.kind == GroupKind.FREE or group.rank <= 1:
        elements, kind = list(enumerate_elements(group, L)), "cayley"
    else:
        raise UnsupportedVertexGroup(f"vertex {v!r}: abelian groups of rank {group.rank} need a peripheral "
                                     f"equal to the whole group")
    present = {x.payload for x in elements}
    for x in elements:
        graph.add_node(("g", x.payload), kind=KIND_ELEMENT, label=str(x) or "1")
    for x in elements:
        for symbol in group.symbols:
            y = multiply(x, letter_element(group, (symbol, 1)))
            if y.payload in present and y.payload != x.payload:
                graph.add_edge(("g", x.payload), ("g", y.payload))
    for p in declared:
        if p.subgroup.is_trivial():
            continue
        for x in elements:
            cone = ("c", p.id, p.subgroup.coset_key(x))
            if cone not in graph:
                graph.add_node(cone, kind=KIND_CONE, label=f"{p.id}@{x}")
            graph.add_edge(cone, ("g", x.payload))
    logger.info(f"Vertex graph {v!r} ({kind}, radius {L}): {graph.number_of_nodes()} nodes")
    return VertexFineGraph(v, kind, L, group, graph, vertex.peripherals)


# =======================================================================
# K and the parabolic forest


@dataclass(frozen=True)
class ForestVertex:
    node: int
    copy: int
    vertex: str
    peripheral: str
    rep: GroupElement
    port: Optional[Tuple[str, str]] = None  # (edge, end) for attachments through a finite container


@dataclass
class ParabolicForest:
    graph: nx.Graph  # nodes are K ids
    vertices: Dict[int, ForestVertex]
    edges: Dict[int, Tuple[int, int]]  # tree edge -> (parent K id, child K id)
    anchors: Dict[Tuple[int, str], int]  # (copy, peripheral) -> K id of the identity coset
    components: List[Tuple[int, ...]] = field(default_factory=list)
    component_of: Dict[int, int] = field(default_factory=dict)


@dataclass
class FineGraphWindow:
    graph: nx.Graph
    tree: TreeWindow
    copies: Dict[int, VertexFineGraph]
    ids: Dict[Tuple[int, Hashable], int]

    @property
    def params(self) -> WindowParams:
        return self.tree.params

    def node(self, copy: int, local: Hashable) -> int:
        return self.ids[(copy, local)]

    def origin(self, copy: int) -> int:
        return self.ids[(copy, self.copies[copy].origin())]


def build_K_and_forest(g: GraphOfGroups, t: TreeWindow, L: int,
                       check_malnormal: bool = True) -> Tuple[FineGraphWindow, ParabolicForest]:
    """
    One copy of the vertex graph per tree vertex X with radius L - |X|, and one edge-space edge per tree edge
    joining the chosen vertex of r·P_start in the parent to the chosen vertex of P_end in the child.
    Finite containers attach through a port vertex per tree edge, so their forest components stay single edges.
    """
    undeclared = g.undeclared_ends()
    if undeclared:
        first = undeclared[0]
        raise HypothesisFailure(first.edge_id, f"end {first.end!r} has no declared container")
    cache: Dict[Tuple[str, int], VertexFineGraph] = {}
    graph = nx.Graph()
    ids: Dict[Tuple[int, Hashable], int] = {}
    copies: Dict[int, VertexFineGraph] = {}

    def add(copy: int, local: Hashable, kind: str, label: str) -> int:
        if (copy, local) not in ids:
            ids[(copy, local)] = len(ids)
            graph.add_node(ids[(copy, local)], copy=copy, local=local, kind=kind, label=label)
        return ids[(copy, local)]

    for tree_vertex in t.vertices:
        radius = L - tree_vertex.length
        key = (tree_vertex.vertex, radius)
        if key not in cache:
            cache[key] = build_vertex_graph(tree_vertex.vertex, g, radius, check_malnormal)
        copy = copies[tree_vertex.index] = cache[key]
        for local, data in copy.graph.nodes(data=True):
            add(tree_vertex.index, local, data["kind"], data["label"])
        for a, b in copy.graph.edges:
            graph.add_edge(ids[(tree_vertex.index, a)], ids[(tree_vertex.index, b)], kind=EDGE_VERTEX_SPACE,
                           copy=tree_vertex.index)

    forest = nx.Graph()
    forest_vertices: Dict[int, ForestVertex] = {}
    anchors: Dict[Tuple[int, str], int] = {}

    def attach(copy: int, edge_end: EdgeEnd, rep: GroupElement) -> int:
        container = g.container_of(edge_end)
        node = ids[(copy, copies[copy].chosen(container.id, rep))]
        port = None
        if container.subgroup.is_finite():
            port = (edge_end.edge_id, edge_end.end)
            label = f"{edge_end.edge_id}:{edge_end.end}@{rep}"
            port_node = add(copy, ("port", edge_end.edge_id, edge_end.end, rep.payload), KIND_PORT, label)
            graph.add_edge(port_node, node, kind=EDGE_VERTEX_SPACE, copy=copy)
            node = port_node
        forest.add_node(node)
        forest_vertices[node] = ForestVertex(node, copy, edge_end.vertex, container.id, rep, port)
        return node

    edges: Dict[int, Tuple[int, int]] = {}
    for tree_edge in t.edges:
        graph_edge = g.edges[tree_edge.edge]
        a = attach(tree_edge.parent, graph_edge.ends[departure_end(tree_edge.step)], tree_edge.rep)
        b = attach(tree_edge.child, graph_edge.ends[arrival_end(tree_edge.step)],
                   identity(g.vertices[t.vertex(tree_edge.child).vertex].group))
        graph.add_edge(a, b, kind=EDGE_EDGE_SPACE, tree_edge=tree_edge.index)
        forest.add_edge(a, b, tree_edge=tree_edge.index)
        edges[tree_edge.index] = (a, b)
    for tree_vertex in t.vertices:
        copy = copies[tree_vertex.index]
        for p in g.vertices[tree_vertex.vertex].declared_peripherals:
            if p.subgroup.is_trivial():
                continue
            start = identity(p.subgroup.group)
            node = ids[(tree_vertex.index, copy.chosen(p.id, start))]
            anchors[(tree_vertex.index, p.id)] = node
            if node not in forest_vertices:
                forest.add_node(node)
                forest_vertices[node] = ForestVertex(node, tree_vertex.index, tree_vertex.vertex, p.id, start)

    components = sorted((tuple(sorted(c)) for c in nx.connected_components(forest)), key=lambda c: c[0])
    component_of = {node: index for index, members in enumerate(components) for node in members}
    k = FineGraphWindow(graph, t, copies, ids)
    f = ParabolicForest(forest, forest_vertices, edges, anchors, components, component_of)
    logger.info(f"Built K on {t.params}: {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges; "
                f"forest has {len(components)} components")
    return k, f


# =======================================================================
# K̄


@dataclass
class QuotientGraph:
    graph: nx.Graph  # nodes are class ids (least K id of the class)
    class_of: Dict[int, int]
    component_of_class: Dict[int, int]
    params: WindowParams


def quotient(k: FineGraphWindow, f: ParabolicForest) -> QuotientGraph:
    """Collapse every forest edge; vertex-space edges survive and remember the copy they came from."""
    classes = UnionFind(k.graph.nodes)
    for a, b in f.edges.values():
        classes.union(a, b)
    class_of: Dict[int, int] = {}
    for members in classes.to_sets():
        representative = min(members)
        for node in members:
            class_of[node] = representative
    component_of_class = {class_of[members[0]]: index for index, members in enumerate(f.components)}
    kbar = nx.Graph()
    members_of: Dict[int, List[int]] = {}
    for node in sorted(class_of):
        members_of.setdefault(class_of[node], []).append(node)
    for representative in sorted(members_of):
        members = members_of[representative]
        component = component_of_class.get(representative)
        if component is not None and len(members) > 1:
            label = f"S{component}"
        else:
            label = k.graph.nodes[representative]["label"]
        kinds = {k.graph.nodes[m]["kind"] for m in members}
        kind = KIND_CONE if KIND_CONE in kinds else k.graph.nodes[representative]["kind"]
        kbar.add_node(representative, members=tuple(members), component=component, kind=kind, label=label)
    for a, b, data in k.graph.edges(data=True):
        if data["kind"] != EDGE_VERTEX_SPACE:
            continue
        u, v = class_of[a], class_of[b]
        if u == v:
            continue
        if kbar.has_edge(u, v):
            kbar.edges[u, v]["copies"] = tuple(sorted(set(kbar.edges[u, v]["copies"]) | {data["copy"]}))
        else:
            kbar.add_edge(u, v, copy=data["copy"], copies=(data["copy"],))
    logger.info(f"Quotient K̄ on {k.params}: {kbar.number_of_nodes()} nodes, {kbar.number_of_edges()} edges")
    return QuotientGraph(kbar, class_of, component_of_class, k.params)


# =======================================================================
# Parabolic tree stabilizers


@dataclass(frozen=True, order=True)
class OrbitType:
    """Orbit of forest vertices: a graph vertex with a peripheral; ports also carry their edge end."""
    vertex: str
    peripheral: str
    port: Optional[Tuple[str, str]] = None

    def __str__(self) -> str:
        suffix = f"[{self.port[0]}:{self.port[1]}]" if self.port else ""
        return f"{self.vertex}/{self.peripheral}{suffix}"


def end_type(g: GraphOfGroups, edge_end: EdgeEnd) -> OrbitType:
    container = g.container_of(edge_end)
    if container.subgroup.is_finite():
        return OrbitType(edge_end.vertex, container.id, (edge_end.edge_id, edge_end.end))
    return OrbitType(edge_end.vertex, container.id)


def _type_subgroup(g: GraphOfGroups, orbit_type: OrbitType) -> Subgroup:
    return g.vertices[orbit_type.vertex].peripherals[orbit_type.peripheral].subgroup


@dataclass(frozen=True)
class ParabolicTreeStabilizer:
    """
    Stabilizer of one orbit of parabolic trees, as a graph of groups over its orbit types:
    conjugated peripheral generators plus one element per non-spanning edge.
    """
    index: int
    representative: OrbitType
    types: Tuple[OrbitType, ...]
    conjugators: Tuple[Word, ...]
    generators: Tuple[Word, ...]
    loop_edges: Tuple[str, ...]
    finite: bool
    truncated: bool
    component: Optional[int]
    graph: GraphOfGroups = field(repr=False, compare=False)

    def contains(self, x: Union[str, Sequence]) -> bool:
        """Exact membership: the reduced form of x must walk the container chain back to the representative."""
        g = self.graph
        root = self.representative
        anchor = g.tree_path(g.base, root.vertex)
        form = g.britton(g.concat(g.concat(g.inverse(anchor), g.path_from_word(x)), anchor))
        current = root
        for index, step in enumerate(form.steps):
            edge = g.edges[step[0]]
            if end_type(g, edge.ends[departure_end(step)]) != current:
                return False
            if not _type_subgroup(g, current).contains(form.syllables[index]):
                return False
            current = end_type(g, edge.ends[arrival_end(step)])
        return current == root and _type_subgroup(g, current).contains(form.syllables[-1])

    def generator_text(self) -> List[str]:
        return [format_word(w) for w in self.generators]


def _orbit_types(g: GraphOfGroups) -> Tuple[List[OrbitType], List[Tuple[str, OrbitType, OrbitType]]]:
    types: List[OrbitType] = []
    for vertex in g.vertices.values():
        for p in vertex.declared_peripherals:
            types.append(OrbitType(vertex.id, p.id))
    links = []
    for edge in g.edges.values():
        a, b = end_type(g, edge.ends["from"]), end_type(g, edge.ends["to"])
        for orbit_type in (a, b):
            if orbit_type not in types:
                types.append(orbit_type)
        links.append((edge.id, a, b))
    return types, links


def _is_maximal(g: GraphOfGroups, edge_end: EdgeEnd) -> bool:
    return g.container_of(edge_end).subgroup.equals(edge_end.image)


def parabolic_tree_stabilizers(f: ParabolicForest, t: TreeWindow, g: GraphOfGroups) -> List[ParabolicTreeStabilizer]:
    types, links = _orbit_types(g)
    classes = UnionFind(range(len(types)))
    position = {orbit_type: i for i, orbit_type in enumerate(types)}
    for _, a, b in links:
        classes.union(position[a], position[b])
    groups: Dict[int, List[OrbitType]] = {}
    for orbit_type in types:
        groups.setdefault(classes[position[orbit_type]], []).append(orbit_type)
    index_cache: Dict[Tuple[str, str], Optional[int]] = {}
    result = []
    for members in sorted(groups.values(), key=lambda m: position[m[0]]):
        result.append(_stabilizer(len(result), members, links, f, t, g, index_cache))
    return result


def _stabilizer(index: int, members: List[OrbitType], links, f: ParabolicForest, t: TreeWindow, g: GraphOfGroups,
                index_cache: Dict[Tuple[str, str], Optional[int]]) -> ParabolicTreeStabilizer:
    member_set = set(members)
    class_links = [(edge_id, a, b) for edge_id, a, b in links if a in member_set]

    def absorbed(orbit_type: OrbitType) -> bool:
        for edge_id, a, b in class_links:
            edge = g.edges[edge_id]
            if a == orbit_type and b != orbit_type and _is_maximal(g, edge.ends["from"]):
                return True
            if b == orbit_type and a != orbit_type and _is_maximal(g, edge.ends["to"]):
                return True
        return False

    root = next((m for m in members if not absorbed(m)), members[0])
    conjugator: Dict[OrbitType, Word] = {root: ()}
    dropped = set()
    spanning = set()
    queue = [root]
    for current in queue:
        for edge_id, a, b in class_links:
            edge = g.edges[edge_id]
            letter = () if edge.in_tree else ((edge.stable_letter, 1),)
            if a == current and b not in conjugator:
                conjugator[b] = free_reduce(conjugator[a] + letter)
                if _is_maximal(g, edge.ends["to"]):
                    dropped.add(b)
            elif b == current and a not in conjugator:
                conjugator[a] = free_reduce(conjugator[b] + tuple(invert_word(letter)))
                if _is_maximal(g, edge.ends["from"]):
                    dropped.add(a)
            else:
                continue
            spanning.add(edge_id)
            queue.append(b if a == current else a)

    generators: List[Word] = []

    def add(word: Word) -> None:
        word = free_reduce(word)
        if word and word not in generators:
            generators.append(word)

    for orbit_type in queue:
        if orbit_type in dropped:
            continue
        g_word = conjugator[orbit_type]
        for element in _type_subgroup(g, orbit_type).generators:
            add(g_word + element_word(element) + tuple(invert_word(g_word)))
    loop_edges = []
    for edge_id, a, b in class_links:
        if edge_id in spanning:
            continue
        edge = g.edges[edge_id]
        letter = () if edge.in_tree else ((edge.stable_letter, 1),)
        add(conjugator[a] + letter + tuple(invert_word(conjugator[b])))
        loop_edges.append(edge_id)

    all_finite = all(_type_subgroup(g, m).is_finite() for m in members)
    component, truncated = _truncation(root, class_links, f, t, g, index_cache)
    finite = all_finite and not loop_edges and not truncated
    if truncated:
        message = (f"Parabolic tree of {root} touches the window boundary {t.params}; "
                   f"its stabilizer generators may be incomplete")
        logger.warning(message)
        warnings.warn(message, TruncationWarning)
    return ParabolicTreeStabilizer(
        index=index,
        representative=root,
        types=tuple(queue),
        conjugators=tuple(conjugator[m] for m in queue),
        generators=tuple(generators),
        loop_edges=tuple(loop_edges),
        finite=finite,
        truncated=truncated,
        component=component,
        graph=g,
    )


def _expected_edges(g: GraphOfGroups, edge_end: EdgeEnd, cache: Dict[Tuple[str, str], Optional[int]]) -> Optional[int]:
    """[container : image], the number of forest edges of this end at each forest vertex; None if infinite."""
    key = (edge_end.edge_id, edge_end.end)
    if key not in cache:
        cache[key] = edge_end.image.index_in(g.container_of(edge_end).subgroup, INDEX_SEARCH_BOUND)
    return cache[key]


def _truncation(root: OrbitType, class_links, f: ParabolicForest, t: TreeWindow, g: GraphOfGroups,
                cache: Dict[Tuple[str, str], Optional[int]]) -> Tuple[Optional[int], bool]:
    """Forest component of the representative's standard copy, and whether it is cut by the window."""
    if not class_links:
        anchor_copy = _standard_copy(g, t, root.vertex)
        node = f.anchors.get((anchor_copy, root.peripheral)) if anchor_copy is not None else None
        return (f.component_of.get(node) if node is not None else None), False
    if root.port is not None:
        # a single edge between two ports
        return None, False
    anchor_copy = _standard_copy(g, t, root.vertex)
    node = f.anchors.get((anchor_copy, root.peripheral)) if anchor_copy is not None else None
    if node is None:
        return None, True
    component = f.component_of[node]
    for member in f.components[component]:
        forest_vertex = f.vertices[member]
        orbit_type = OrbitType(forest_vertex.vertex, forest_vertex.peripheral, forest_vertex.port)
        counts: Dict[Tuple[str, str], int] = {}
        for _, _, data in f.graph.edges(member, data=True):
            tree_edge = t.edges[data["tree_edge"]]
            step = tree_edge.step
            end = departure_end(step) if f.edges[tree_edge.index][0] == member else arrival_end(step)
            counts[(tree_edge.edge, end)] = counts.get((tree_edge.edge, end), 0) + 1
        for edge_id, a, b in class_links:
            for end, end_orbit in (("from", a), ("to", b)):
                if end_orbit != orbit_type:
                    continue
                expected = _expected_edges(g, g.edges[edge_id].ends[end], cache)
                if expected is None or counts.get((edge_id, end), 0) < expected:
                    return component, True
    return component, False


def _standard_copy(g: GraphOfGroups, t: TreeWindow, vertex: str) -> Optional[int]:
    return locate(g, t, g.tree_path(g.base, vertex))


# =======================================================================
# Fineness and hyperbolicity


def block_of(graph: nx.Graph, edge: Tuple[Hashable, Hashable]) -> nx.Graph:
    """The biconnected component holding *edge*, as an induced subgraph view. Every cycle through the edge lies in it."""
    u, v = edge
    if not graph.has_edge(u, v):
        raise ValueError(f"edge {edge!r} is not in the graph")
    for component in nx.biconnected_component_edges(graph):
        if any({a, b} == {u, v} for a, b in component):
            nodes = {a for pair in component for a in pair}
            return graph.subgraph(nodes)
    raise ValueError(f"edge {edge!r} is not in any biconnected component")


def circuits_through(graph: nx.Graph, edge: Tuple[Hashable, Hashable], n: int) -> List[List[Hashable]]:
    """Embedded cycles of length <= n through *edge*, each as its vertex list starting u ... v."""
    u, v = edge
    block = block_of(graph, edge)
    return [path for path in nx.all_simple_paths(block, u, v, cutoff=n - 1) if len(path) > 2]


def check_fine(graph: nx.Graph, edge: Tuple[Hashable, Hashable], n: int) -> int:
    if n < 3:
        raise ValueError(f"circuit bound must be at least 3; got {n}")
    return len(circuits_through(graph, edge, n))


def base_cone_edge(k: FineGraphWindow, kbar: QuotientGraph) -> Optional[Tuple[Hashable, Hashable]]:
    """
    The K̄ edge from the base copy's origin to its least cone neighbour, or to its least neighbour when the
    base vertex group has no peripheral cone. None for an isolated base vertex.
    """
    base = kbar.class_of[k.origin(BASE_INDEX)]
    neighbours = sorted(kbar.graph.neighbors(base))
    if not neighbours:
        return None
    cones = [n for n in neighbours if kbar.graph.nodes[n]["kind"] == KIND_CONE]
    return base, (cones or neighbours)[0]


def distance_matrix(graph: nx.Graph) -> Tuple[List[Hashable], np.ndarray]:
    nodes = list(graph.nodes)
    position = {node: i for i, node in enumerate(nodes)}
    distances = np.full((len(nodes), len(nodes)), -1, dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(graph):
        for target, d in lengths.items():
            distances[position[source], position[target]] = d
    return nodes, distances


def _scan_block(block: nx.Graph, best: float) -> float:
    """
    Four-point scan of one block. The gap of a quadruple never exceeds any of its pairwise distances, so pairs
    are taken by decreasing distance and the scan stops once the distance falls to *best*.
    """
    _, d = distance_matrix(block)
    n = d.shape[0]
    upper = np.triu_indices(n, k=1)
    order = np.argsort(-d[upper], kind="stable")
    for position in order:
        x, y = upper[0][position], upper[1][position]
        if d[x, y] <= best:
            break
        s1 = d[x, y] + d
        s2 = d[x, :][:, None] + d[y, :][None, :]
        s3 = d[y, :][:, None] + d[x, :][None, :]
        sums = np.sort(np.stack([s1, s2, s3]), axis=0)
        best = max(best, float((sums[2] - sums[1]).max()) / 2)
    return best


def check_hyperbolic(graph: nx.Graph) -> float:
    """
    Exact four-point δ: the largest half-gap between the two largest of the three pair sums over all quadruples.
    δ of a graph is the largest δ of its biconnected components, and distances inside a component are the
    graph's own, so each component of four or more vertices is scanned on its own distance matrix.
    """
    if graph.number_of_nodes() == 0:
        raise EmptySubgraph("cannot measure δ of an empty graph")
    if not nx.is_connected(graph):
        raise DisconnectedGraph("four-point δ needs a connected graph")
    blocks = sorted((b for b in nx.biconnected_components(graph) if len(b) >= 4), key=len, reverse=True)
    best = 0.0
    for block in blocks:
        best = _scan_block(graph.subgraph(block), best)
    logger.debug(f"δ = {best} over {len(blocks)} blocks of {graph.number_of_nodes()} vertices")
    return best
