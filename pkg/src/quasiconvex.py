from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from src.bass_serre import (InducedSplitting, SubtreeWindow, TamePresentation, TreeWindow, WindowParams,
                            build_tree_window, local_offset, minimal_subtree_and_splitting)
from src.fine_graph import (KIND_CONE, POINT, FineGraphWindow, ParabolicForest, QuotientGraph, VertexFineGraph,
                            build_K_and_forest, quotient)
from src.graph_of_groups import GraphOfGroups, validate
from src.graph_of_groups_types import EDGE_ENDS, GraphOfGroupsSpec
from src.group_kernel import GroupElement, GroupKind, element_word, format_word, letter_element, multiply
from src.subgroups import almost_malnormal_collection, make_subgroup
from src.toolkit_errors import DisconnectedSelection, EmptySubgraph

logger = logging.getLogger(__name__)

DEFAULT_GEODESIC_CAP = 1_000_000


@dataclass(frozen=True)
class KappaMeasurement:
    kappa: int
    distortion: float
    max_geodesics: int
    capped: bool
    cap: int


@dataclass(frozen=True)
class QuasiconvexWitness:
    """L̄ ⊆ K̄ with the per-selection pieces Lᵢ (K ids in the copy of the selected vertex)."""
    vertices: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    params: WindowParams
    pieces: Dict[int, Tuple[int, ...]] = field(compare=False)
    subtree: Optional[SubtreeWindow] = field(default=None, compare=False, repr=False)
    splitting: Optional[InducedSplitting] = field(default=None, compare=False, repr=False)
    kappa: Optional[KappaMeasurement] = None


# =======================================================================
# Witness construction


def _orbit_elements(copy: VertexFineGraph, generators: Sequence[GroupElement], offset: GroupElement) -> Set[Hashable]:
    """offset·H·prefixes(generators) inside the copy: Cayley paths of the generator loops and their translates."""
    group = copy.group
    words = []
    for generator in generators:
        word = element_word(generator)
        if word:
            words.append(word)
            words.append(element_word(generator.inverse()))
    start = offset
    found = {("g", start.payload)} if ("g", start.payload) in copy.graph else set()
    if not found:
        return found
    seen = {start.payload}
    queue = [start]
    for x in queue:
        for word in words:
            y = x
            for letter in word:
                y = multiply(y, letter_element(group, letter))
                if ("g", y.payload) in copy.graph:
                    found.add(("g", y.payload))
            if ("g", y.payload) in copy.graph and y.payload not in seen:
                seen.add(y.payload)
                queue.append(y)
    return found


def vertex_piece(copy: VertexFineGraph, generators: Sequence[GroupElement], offset: GroupElement) -> Set[Hashable]:
    """
    Lᵢ for H_v = ⟨generators⟩ translated by offset: the point for singletons, offset·1 for trivial H_v,
    the chosen vertex of c·P when H_v ≤ c·P·c⁻¹, else the orbit elements and the cones they share.
    """
    if copy.is_singleton:
        return {POINT}
    subgroup = make_subgroup(copy.group, generators)
    if subgroup.is_trivial():
        origin = ("g", offset.payload)
        return {origin} if origin in copy.graph else set()
    for peripheral in copy.peripherals.values():
        if not peripheral.declared or peripheral.subgroup.is_trivial():
            continue
        conjugator = subgroup.conjugate_into(peripheral.subgroup)
        if conjugator is not None:
            node = copy.chosen(peripheral.id, multiply(offset, conjugator))
            if node in copy.graph:
                return {node}
    elements = _orbit_elements(copy, subgroup.generators, offset)
    piece = set(elements)
    for node, data in copy.graph.nodes(data=True):
        if data["kind"] == KIND_CONE and sum(1 for n in copy.graph.neighbors(node) if n in elements) >= 2:
            piece.add(node)
    return piece


def _connect(graph: nx.Graph, nodes: Set[int]) -> Set[int]:
    """Join the components of the induced subgraph by shortest paths, always from the component holding the least id."""
    nodes = set(nodes)
    while True:
        components = sorted((set(c) for c in nx.connected_components(graph.subgraph(nodes))), key=min)
        if len(components) <= 1:
            return nodes
        first = components[0]
        parents: Dict[int, Optional[int]] = {s: None for s in sorted(first)}
        queue = deque(sorted(first))
        target = None
        while queue:
            x = queue.popleft()
            if x in nodes and x not in first:
                target = x
                break
            for y in sorted(graph.neighbors(x)):
                if y not in parents:
                    parents[y] = x
                    queue.append(y)
        if target is None:
            raise DisconnectedSelection(f"L̄ has {len(components)} components that K̄ cannot join")
        while target is not None:
            nodes.add(target)
            target = parents[target]


def build_L(h: TamePresentation, k: FineGraphWindow, f: ParabolicForest, t: TreeWindow, g: GraphOfGroups,
            kbar: Optional[QuotientGraph] = None) -> QuasiconvexWitness:
    """L = F_H ∪ ⋃ H·Lᵢ inside the window, then its image L̄ in K̄, made connected along K̄ geodesics."""
    kbar = kbar if kbar is not None else quotient(k, f)
    subtree, splitting = minimal_subtree_and_splitting(t, h)
    nodes: Set[int] = set()
    pieces: Dict[int, Tuple[int, ...]] = {}
    for index in sorted(subtree.translators):
        u, position = subtree.translators[index]
        offset = local_offset(g, t, h, index, u, position)
        if offset is None:
            continue
        local = vertex_piece(k.copies[index], h.selected[position].generators, offset)
        ids = {k.node(index, node) for node in local}
        if not u:
            pieces[position] = tuple(sorted(ids))
        nodes |= ids
    for edge_index in subtree.edges:
        nodes.update(f.edges[edge_index])
    if not nodes:
        raise DisconnectedSelection(f"the tame presentation {h.id!r} has no vertices in the window {t.params}")
    lbar = _connect(kbar.graph, {kbar.class_of[n] for n in nodes})
    edges = tuple(sorted(tuple(sorted(e)) for e in kbar.graph.subgraph(lbar).edges))
    logger.info(f"Built L̄ for {h.id!r} on {t.params}: {len(lbar)} vertices, {len(edges)} edges")
    return QuasiconvexWitness(tuple(sorted(lbar)), edges, t.params, pieces, subtree, splitting)


# =======================================================================
# κ


def _geodesic_hull(graph: nx.Graph, chosen: Sequence[Hashable]) -> Set[Hashable]:
    """
    Vertices of the blocks on the smallest subtree of the block-cut tree reaching every L̄ vertex. Any geodesic
    between L̄ vertices, and any shortest path from such a geodesic back to L̄, stays inside them.
    """
    blocks = [frozenset(b) for b in nx.biconnected_components(graph)]
    owners: Dict[Hashable, List[int]] = {}
    for i, block in enumerate(blocks):
        for node in block:
            owners.setdefault(node, []).append(i)
    tree = nx.Graph()
    tree.add_nodes_from(("B", i) for i in range(len(blocks)))
    for node, held in owners.items():
        if len(held) > 1:
            tree.add_edges_from((("C", node), ("B", i)) for i in held)
    hull: Set[Hashable] = set()
    terminals = set()
    for node in chosen:
        held = owners.get(node, [])
        if not held:
            hull.add(node)
        else:
            terminals.add(("C", node) if len(held) > 1 else ("B", held[0]))
    leaves = deque(n for n in tree if tree.degree(n) <= 1 and n not in terminals)
    while leaves:
        leaf = leaves.popleft()
        if leaf not in tree:
            continue
        neighbours = list(tree.neighbors(leaf))
        tree.remove_node(leaf)
        leaves.extend(n for n in neighbours if tree.degree(n) <= 1 and n not in terminals)
    for kind, item in tree.nodes:
        if kind == "B":
            hull |= blocks[item]
        else:
            hull.add(item)
    return hull


def _arcs(graph: nx.Graph, nodes: List[Hashable]) -> Tuple[np.ndarray, np.ndarray]:
    """Both orientations of every edge among *nodes*, as tail and head positions."""
    position = {node: i for i, node in enumerate(nodes)}
    pairs = np.array([(position[u], position[v]) for u, v in graph.subgraph(nodes).edges],
                     dtype=np.int64).reshape(-1, 2)
    return np.concatenate([pairs[:, 0], pairs[:, 1]]), np.concatenate([pairs[:, 1], pairs[:, 0]])


def _breadth_first(tails: np.ndarray, heads: np.ndarray, n: int, sources: Sequence[int],
                   cap: int) -> Tuple[np.ndarray, np.ndarray]:
    """Layered search from *sources*: distances (-1 when unreachable) and geodesic counts capped at *cap*."""
    dist = np.full(n, -1, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    dist[list(sources)] = 0
    counts[list(sources)] = 1
    frontier = dist == 0
    layer = 0
    while True:
        leaving = frontier[tails]
        fresh = leaving & (dist[heads] < 0)
        if not fresh.any():
            return dist, counts
        reached = np.unique(heads[fresh])
        dist[reached] = layer + 1
        forward = leaving & (dist[heads] == layer + 1)
        np.add.at(counts, heads[forward], counts[tails[forward]])
        np.minimum(counts, cap, out=counts)
        frontier = np.zeros(n, dtype=bool)
        frontier[reached] = True
        layer += 1


def _on_geodesics(tails: np.ndarray, heads: np.ndarray, dist: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Vertices on some geodesic from the search source to a target, walking the layers back from the far end."""
    on = targets & (dist >= 0)
    forward = (dist[tails] >= 0) & (dist[heads] == dist[tails] + 1)
    tails, heads = tails[forward], heads[forward]
    layer_of = dist[tails]
    for layer in range(int(dist.max()) - 1, -1, -1):
        step = (layer_of == layer) & on[heads]
        on[tails[step]] = True
    return on


def measure_kappa(kbar: nx.Graph, lbar: Iterable[Hashable], cap: int = DEFAULT_GEODESIC_CAP) -> KappaMeasurement:
    """
    κ = max d(z, L̄) over vertices z on some geodesic between two L̄ vertices. Also the distortion
    max d_L̄/d_K̄ and the largest geodesic count per pair. All searches run inside the block-cut hull of L̄;
    when L̄ fills the hull, κ is 0 and the distortion is 1 without further search.
    """
    graph = kbar.graph if isinstance(kbar, QuotientGraph) else kbar
    chosen = sorted(set(lbar))
    if not chosen:
        raise EmptySubgraph("L̄ is empty")
    missing = [node for node in chosen if node not in graph]
    if missing:
        raise EmptySubgraph(f"L̄ vertices {missing[:3]} are not in K̄")
    if len(chosen) == 1:
        return KappaMeasurement(0, 1.0, 1, False, cap)

    hull = _geodesic_hull(graph, chosen)
    nodes = [node for node in graph if node in hull]
    n = len(nodes)
    position = {node: i for i, node in enumerate(nodes)}
    tails, heads = _arcs(graph, nodes)
    sources = [position[node] for node in chosen]
    in_lbar = np.zeros(n, dtype=bool)
    in_lbar[sources] = True
    filled = bool(in_lbar.all())
    logger.debug(f"κ hull: {n} vertices for {len(chosen)} L̄ vertices (filled: {filled})")
    if not filled:
        to_lbar, _ = _breadth_first(tails, heads, n, sources, cap)
        inside = in_lbar[tails] & in_lbar[heads]
        inner_tails, inner_heads = tails[inside], heads[inside]

    kappa = 0
    max_geodesics = 1
    distortion = 1.0
    for x in sources:
        dist, counts = _breadth_first(tails, heads, n, [x], cap)
        others = in_lbar.copy()
        others[x] = False
        max_geodesics = max(max_geodesics, int(counts[others].max()))
        if filled:
            continue
        on = _on_geodesics(tails, heads, dist, others)
        if on.any():
            kappa = max(kappa, int(to_lbar[on].max()))
        inner, _ = _breadth_first(inner_tails, inner_heads, n, [x], cap)
        ambient, within = dist[others], inner[others]
        comparable = (ambient > 0) & (within > 0)
        if comparable.any():
            distortion = max(distortion, float((within[comparable] / ambient[comparable]).max()))
    capped = max_geodesics >= cap
    if capped:
        logger.warning(f"Geodesic count reached the cap {cap}; κ is a lower bound")
    return KappaMeasurement(kappa, round(distortion, 6), max_geodesics, capped, cap)


# =======================================================================
# Hypotheses


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    vertex: str
    holds: bool
    edge: Optional[str] = None
    end: Optional[str] = None
    witness: Optional[str] = None
    detail: str = ""

    def describe(self) -> str:
        where = f"edge {self.edge!r} end {self.end!r}" if self.edge else f"vertex {self.vertex!r}"
        witness = f" with witness g={self.witness}" if self.witness is not None else ""
        return f"hypothesis {self.name} fails at {where}{witness}{': ' + self.detail if self.detail else ''}"


@dataclass(frozen=True)
class HypothesisReport:
    route: str  # "parabolic" | "criterion"
    checks: Tuple[HypothesisCheck, ...]
    info: Tuple[HypothesisCheck, ...] = ()

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def first_failure(self) -> Optional[HypothesisCheck]:
        return next((c for c in self.checks if not c.holds), None)


def _quasiconvexity_certificate(kind: GroupKind) -> str:
    return {GroupKind.FREE: "finitely generated subgroup of a free group",
            GroupKind.ABELIAN: "subgroup of an abelian group",
            GroupKind.FINITE: "subgroup of a finite group"}[kind]


def _element_text(element: Optional[GroupElement]) -> Optional[str]:
    if element is None:
        return None
    return format_word(element_word(element))


def check_qc_hypotheses(g: GraphOfGroups) -> HypothesisReport:
    """
    Parabolic route when every end declares a container; otherwise the criterion route checks, per vertex,
    (a) totality of undeclared images against the vertex peripherals, (b) their quasiconvexity and
    (c) almost malnormality of the undeclared image family.
    """
    undeclared = g.undeclared_ends()
    checks: List[HypothesisCheck] = []
    info: List[HypothesisCheck] = []
    for vertex in g.vertices.values():
        declared = vertex.declared_peripherals
        for edge_end in g.ends_at(vertex.id):
            if edge_end.container is None:
                continue
            verdict = edge_end.image.is_total_relative([p.subgroup for p in declared])
            info.append(HypothesisCheck("total", vertex.id, verdict.holds, edge_end.edge_id, edge_end.end,
                                        _element_text(verdict.witness)))
    if not undeclared:
        for vertex in g.vertices.values():
            for edge_end in g.ends_at(vertex.id):
                checks.append(HypothesisCheck("parabolic", vertex.id, True, edge_end.edge_id, edge_end.end,
                                              detail=f"container {edge_end.container}"))
            declared = vertex.declared_peripherals
            verdict = almost_malnormal_collection([p.subgroup for p in declared])
            detail = "" if verdict.holds else f"{declared[verdict.first].id} and {declared[verdict.second].id}"
            checks.append(HypothesisCheck("peripherals almost malnormal", vertex.id, verdict.holds,
                                          witness=_element_text(verdict.witness), detail=detail))
            checks.append(HypothesisCheck("quasiconvex", vertex.id, True,
                                          detail=_quasiconvexity_certificate(vertex.group.kind)))
        return HypothesisReport("parabolic", tuple(checks), tuple(info))

    for vertex in g.vertices.values():
        ends = [e for e in undeclared if e.vertex == vertex.id]
        if not ends:
            continue
        peripherals = [p for p in vertex.declared_peripherals]
        for edge_end in ends:
            verdict = edge_end.image.is_total_relative([p.subgroup for p in peripherals])
            detail = "" if verdict.holds else f"meets {peripherals[verdict.index].id} in an infinite proper subgroup"
            checks.append(HypothesisCheck("(a) total", vertex.id, verdict.holds, edge_end.edge_id, edge_end.end,
                                          _element_text(verdict.witness), detail))
        for edge_end in ends:
            checks.append(HypothesisCheck("(b) quasiconvex", vertex.id, True, edge_end.edge_id, edge_end.end,
                                          detail=_quasiconvexity_certificate(vertex.group.kind)))
        verdict = almost_malnormal_collection([e.image for e in ends])
        detail = ""
        if not verdict.holds:
            first, second = ends[verdict.first], ends[verdict.second]
            detail = f"{first.edge_id}:{first.end} and {second.edge_id}:{second.end}"
        checks.append(HypothesisCheck("(c) almost malnormal", vertex.id, verdict.holds,
                                      witness=_element_text(verdict.witness), detail=detail))
    return HypothesisReport("criterion", tuple(checks), tuple(info))


def extension_peripheral_id(edge_id: str, end: str) -> str:
    return f"edge:{edge_id}:{end}"


def extend_with_edge_groups(g: GraphOfGroups) -> GraphOfGroups:
    """
    Every undeclared end gets its image as a new peripheral container. Declared peripherals contained in
    a new member are absorbed into it, and containers pointing at them move to the new member.
    """
    undeclared = g.undeclared_ends()
    if not undeclared:
        return g
    raw = g.spec.model_dump(by_alias=True)
    absorbed: Dict[Tuple[str, str], str] = {}
    for edge_end in undeclared:
        new_id = extension_peripheral_id(edge_end.edge_id, edge_end.end)
        vertex = g.vertices[edge_end.vertex]
        for peripheral in vertex.declared_peripherals:
            if edge_end.image.contains_subgroup(peripheral.subgroup) and (vertex.id, peripheral.id) not in absorbed:
                absorbed[(vertex.id, peripheral.id)] = new_id
        words = [format_word(element_word(x)) for x in edge_end.generator_images]
        raw["vertices"][vertex.id]["peripherals"].append({"id": new_id, "generators": words})
        raw["edges"][edge_end.edge_id][f"{edge_end.end}_container"] = new_id
    for (vertex_id, peripheral_id), new_id in absorbed.items():
        raw["vertices"][vertex_id]["peripherals"] = [p for p in raw["vertices"][vertex_id]["peripherals"]
                                                     if p["id"] != peripheral_id]
        for edge in raw["edges"].values():
            for end in EDGE_ENDS:
                if edge[end] == vertex_id and edge[f"{end}_container"] == peripheral_id:
                    edge[f"{end}_container"] = new_id
    extended = GraphOfGroups(GraphOfGroupsSpec.model_validate(raw))
    validate(extended)
    logger.info(f"Extended the peripheral structure with {len(undeclared)} edge groups")
    return extended


# =======================================================================


@dataclass(frozen=True)
class QuasiconvexityVerdict:
    """holds only when the hypotheses were checked and κ agreed on the compared windows."""
    holds: bool
    text: str
    hypotheses: Optional[HypothesisReport]
    witnesses: Tuple[QuasiconvexWitness, ...]
    stable: bool


def verify_relative_quasiconvexity(g: GraphOfGroups, h: TamePresentation, windows: Sequence[Tuple[int, int]],
                                   skip_hypotheses: bool = False, stability_step: int = 2,
                                   cap: int = DEFAULT_GEODESIC_CAP) -> QuasiconvexityVerdict:
    """Hypotheses, then K̄ and L̄ per window, then κ per window; stable iff κ agrees on the largest windows."""
    report = None
    if not skip_hypotheses:
        report = check_qc_hypotheses(g)
        failure = report.first_failure
        if failure is not None:
            return QuasiconvexityVerdict(False, failure.describe(), report, (), False)
    target = extend_with_edge_groups(g) if g.undeclared_ends() else g
    witnesses = []
    for R, L in sorted(windows):
        t = build_tree_window(target, R, L)
        k, f = build_K_and_forest(target, t, L, check_malnormal=not skip_hypotheses)
        kbar = quotient(k, f)
        witness = build_L(h, k, f, t, target, kbar)
        witnesses.append(replace(witness, kappa=measure_kappa(kbar, witness.vertices, cap)))
    kappas = [w.kappa.kappa for w in witnesses]
    compared = kappas[-stability_step:]
    stable = stability_step >= 2 and len(compared) == stability_step and len(set(compared)) == 1
    prefix = "hypotheses skipped (no soundness claim)" if skip_hypotheses else "hypotheses hold"
    if stable:
        text = f"{prefix}; witness stable at κ={kappas[-1]}"
    else:
        text = f"{prefix}; witness not yet stable: κ per window {kappas}"
    return QuasiconvexityVerdict(not skip_hypotheses and stable, text, report, tuple(witnesses), stable)
