from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from networkx.utils import UnionFind

from src.bass_serre import (SelectedVertex, StabilizerDescriptor, TamePresentation, TreeWindow, WindowParams,
                            build_tree_window)
from src.fine_graph import (ParabolicForest, ParabolicTreeStabilizer, build_K_and_forest,
                            parabolic_tree_stabilizers, quotient)
from src.graph_of_groups import EdgeEnd, GraphOfGroups, Peripheral
from src.group_kernel import (GroupElement, GroupKind, Word, element_word, enumerate_elements, format_word,
                              free_reduce, invert_word)
from src.quasiconvex import QuasiconvexWitness, build_L, measure_kappa
from src.subgroups import Subgroup, almost_malnormal_collection, make_subgroup
from src.toolkit_errors import (HypothesisFailure, IsolationFailure, MaximalityFailure,
                                MissingIntersectionWitness, NotAnExtension)

logger = logging.getLogger(__name__)

CONJUGATOR_SEARCH_LENGTH = 2

VARIANT_Q = "Q"
VARIANT_MAXIMAL_BOTH = "maximal-both"
VARIANT_MAXIMAL_INITIAL = "maximal-initial"
VARIANT_AUTO = "auto"
UNION_VARIANTS = (VARIANT_MAXIMAL_BOTH, VARIANT_MAXIMAL_INITIAL, VARIANT_AUTO)


@dataclass(frozen=True)
class PeripheralDescriptor:
    """One peripheral subgroup given by G-word generators, with where it came from and how to test membership."""
    generators: Tuple[Word, ...]
    provenance: str
    finite: bool = False
    truncated: bool = False
    vertex: Optional[str] = None  # set when every generator lies in this vertex group
    subgroup: Optional[Subgroup] = field(default=None, compare=False, repr=False)
    oracle: Optional[Callable[[Union[str, Sequence]], bool]] = field(default=None, compare=False, repr=False)
    tame: Optional[TamePresentation] = field(default=None, compare=False, repr=False)
    representative: Tuple[Word, ...] = ()
    conjugator: Word = ()

    def contains(self, x: Union[str, Sequence]) -> Optional[bool]:
        """Membership where decidable, None otherwise."""
        return self.oracle(x) if self.oracle is not None else None

    def generator_text(self) -> List[str]:
        return [format_word(w) for w in (self.representative or self.generators)]


@dataclass(frozen=True)
class RemovedPeripheral:
    """A repeat dropped from the union, with the edge chain identifying it to the retained representative."""
    provenance: str
    retained: str
    chain: Tuple[str, ...]
    conjugator: Word  # c with c·removed·c⁻¹ inside the retained one


@dataclass(frozen=True)
class PeripheralStructure:
    members: Tuple[PeripheralDescriptor, ...]
    variant: str
    params: Optional[WindowParams] = None
    removed: Tuple[RemovedPeripheral, ...] = ()
    note: str = ""

    def provenances(self) -> List[str]:
        return [m.provenance for m in self.members]

    def member(self, provenance: str) -> PeripheralDescriptor:
        for m in self.members:
            if m.provenance == provenance:
                return m
        raise KeyError(provenance)


# =======================================================================
# Descriptors and words


def vertex_provenance(vertex: str, peripheral: str) -> str:
    return f"vertex:{vertex}/{peripheral}"


def _local(g: GraphOfGroups, vertex: str) -> StabilizerDescriptor:
    return StabilizerDescriptor((), vertex, g.tree_path(g.base, vertex), g)


def vertex_descriptor(g: GraphOfGroups, vertex: str, generators: Sequence[GroupElement],
                      provenance: str) -> PeripheralDescriptor:
    """A subgroup of G_vertex; tree edges are trivial in G-words, so its local words are G-words too."""
    subgroup = make_subgroup(g.vertex(vertex).group, generators)
    local = _local(g, vertex)

    def oracle(x: Union[str, Sequence]) -> bool:
        element = local.local(x)
        return element is not None and subgroup.contains(element)

    words = tuple(element_word(x) for x in subgroup.generators if not x.is_identity())
    tame = TamePresentation(provenance, (SelectedVertex((), vertex, tuple(subgroup.generators)),))
    return PeripheralDescriptor(words, provenance, subgroup.is_finite(), False, vertex, subgroup, oracle, tame)


def peripheral_descriptor(g: GraphOfGroups, peripheral: Peripheral) -> PeripheralDescriptor:
    return vertex_descriptor(g, peripheral.vertex, peripheral.subgroup.generators,
                             vertex_provenance(peripheral.vertex, peripheral.id))


def _stabilizer_tame(g: GraphOfGroups, stabilizer: ParabolicTreeStabilizer, provenance: str) -> TamePresentation:
    """The representative's peripheral as the selected vertex; every other generator connects."""
    root = stabilizer.representative
    peripheral = g.vertices[root.vertex].peripherals[root.peripheral]
    local = [element_word(x) for x in peripheral.subgroup.generators]
    connecting = tuple(w for w in stabilizer.generators if w not in local)
    selected = SelectedVertex(stabilizer.conjugators[0], root.vertex, tuple(peripheral.subgroup.generators))
    return TamePresentation(provenance, (selected,), connecting)


def short_words(g: GraphOfGroups, length: int) -> List[Word]:
    """Freely reduced G-words over the global alphabet up to *length*, in ShortLex order."""
    letters = [(symbol, sign) for symbol in g.alphabet for sign in (1, -1)]
    words: List[Word] = [()]
    frontier: List[Word] = [()]
    for _ in range(length):
        extended = []
        for word in frontier:
            for letter in letters:
                if word and word[-1] == (letter[0], -letter[1]):
                    continue
                extended.append(word + (letter,))
        words.extend(extended)
        frontier = extended
    return words


def _conjugate_word(c: Word, x: Word) -> Word:
    return free_reduce(tuple(c) + tuple(x) + tuple(invert_word(c)))


def _word_key(g: GraphOfGroups, word: Word) -> Tuple:
    position = {symbol: i for i, symbol in enumerate(g.alphabet)}
    return len(word), tuple((position[s], 0 if e > 0 else 1) for s, e in word)


def normalize_representative(g: GraphOfGroups, descriptor: PeripheralDescriptor,
                             bound: int = CONJUGATOR_SEARCH_LENGTH) -> PeripheralDescriptor:
    """The ShortLex-least conjugate generator set over conjugators up to *bound*, kept beside the generators."""
    def canonical(word: Word) -> Word:
        return g.word_of(g.canonical_form(word))

    best_key = None
    best: Tuple[Tuple[Word, ...], Word] = (descriptor.generators, ())
    for c in short_words(g, bound):
        words = tuple(canonical(_conjugate_word(c, w)) for w in descriptor.generators)
        key = (sum(len(w) for w in words), tuple(sorted(_word_key(g, w) for w in words)), _word_key(g, c))
        if best_key is None or key < best_key:
            best_key, best = key, (words, c)
    return replace(descriptor, representative=best[0], conjugator=best[1])


def _conjugate_into(g: GraphOfGroups, first: PeripheralDescriptor, second: PeripheralDescriptor,
                    bound: int) -> Optional[Word]:
    """A short c with c·first·c⁻¹ ≤ second by membership of the generators, or None."""
    if second.oracle is None or not first.generators:
        return None
    for c in short_words(g, bound):
        if all(second.contains(_conjugate_word(c, w)) for w in first.generators):
            return c
    return None


def _repeat_note(g: GraphOfGroups, members: Sequence[PeripheralDescriptor], bound: int) -> str:
    infinite = [m for m in members if not m.finite]
    for i, first in enumerate(infinite):
        for second in infinite[i + 1:]:
            forward = _conjugate_into(g, first, second, bound)
            backward = _conjugate_into(g, second, first, bound)
            if forward is not None and backward is not None:
                return (f"repeat found: {first.provenance} is conjugate to {second.provenance} "
                        f"by {format_word(forward)}")
    return f"no repeat found up to length {bound}"


# =======================================================================
# ℚ


def _require_declared(g: GraphOfGroups) -> None:
    undeclared = g.undeclared_ends()
    if undeclared:
        end = undeclared[0]
        raise HypothesisFailure(end.edge_id, f"end {end.end!r} has no declared parabolic container")


def compute_Q(g: GraphOfGroups, t: TreeWindow, f: Optional[ParabolicForest] = None,
              bound: int = CONJUGATOR_SEARCH_LENGTH) -> PeripheralStructure:
    """
    ℚ: one member per orbit of parabolic trees, generated by its stabilizer. Finite stabilizers are
    omitted; a relatively hyperbolic structure may add or drop finite subgroups freely.
    """
    _require_declared(g)
    if f is None:
        _, f = build_K_and_forest(g, t, t.params.L)
    members = []
    for stabilizer in parabolic_tree_stabilizers(f, t, g):
        if stabilizer.finite:
            continue
        if len(stabilizer.types) == 1 and not stabilizer.loop_edges:
            root = stabilizer.representative
            descriptor = peripheral_descriptor(g, g.vertices[root.vertex].peripherals[root.peripheral])
            members.append(replace(descriptor, truncated=stabilizer.truncated))
            continue
        provenance = f"component:{stabilizer.index}"
        members.append(PeripheralDescriptor(
            generators=stabilizer.generators,
            provenance=provenance,
            finite=False,
            truncated=stabilizer.truncated,
            oracle=stabilizer.contains,
            tame=_stabilizer_tame(g, stabilizer, provenance),
        ))
    bound = min(bound, t.params.L)
    members = [normalize_representative(g, m, bound) for m in members]
    logger.info(f"ℚ has {len(members)} infinite members on {t.params}")
    return PeripheralStructure(tuple(members), VARIANT_Q, t.params, (), _repeat_note(g, members, bound))


# =======================================================================
# Union minus repeats


def _is_maximal(g: GraphOfGroups, edge_end: EdgeEnd) -> bool:
    return g.container_of(edge_end).subgroup.equals(edge_end.image)


def _infinite_container(g: GraphOfGroups, edge_end: EdgeEnd) -> bool:
    return not g.container_of(edge_end).subgroup.is_finite()


def _edge_letter(g: GraphOfGroups, edge_id: str) -> Word:
    edge = g.edges[edge_id]
    return () if edge.in_tree else ((edge.stable_letter, 1),)


def _verify_chain(g: GraphOfGroups, removed: Peripheral, retained: Peripheral, conjugator: Word,
                  both_ways: bool) -> bool:
    """c·removed·c⁻¹ ≤ retained (and the reverse inclusion when *both_ways*), checked on normal forms."""
    into = _local(g, retained.vertex)
    for x in removed.subgroup.generators:
        element = into.local(_conjugate_word(conjugator, element_word(x)))
        if element is None or not retained.subgroup.contains(element):
            return False
    if both_ways:
        back = _local(g, removed.vertex)
        inverse = tuple(invert_word(conjugator))
        for x in retained.subgroup.generators:
            element = back.local(_conjugate_word(inverse, element_word(x)))
            if element is None or not removed.subgroup.contains(element):
                return False
    return True


def _declared_members(g: GraphOfGroups, skip: Sequence[Tuple[str, str]]) -> List[PeripheralDescriptor]:
    members = []
    for vertex in g.vertices.values():
        for peripheral in vertex.declared_peripherals:
            if (vertex.id, peripheral.id) in skip or peripheral.subgroup.is_finite():
                continue
            members.append(peripheral_descriptor(g, peripheral))
    return members


def declared_structure(g: GraphOfGroups) -> PeripheralStructure:
    """The declared peripherals of every vertex as one structure, infinite members only."""
    return PeripheralStructure(tuple(_declared_members(g, ())), "declared")


def _union_maximal_both(g: GraphOfGroups) -> Tuple[List[RemovedPeripheral], List[Tuple[str, str]]]:
    """Maximal at both ends: identified peripherals form trees; keep the first declared of each."""
    links = []
    for edge in g.edges.values():
        ends = (edge.ends["from"], edge.ends["to"])
        if not all(_infinite_container(g, e) for e in ends):
            continue
        for edge_end in ends:
            if not _is_maximal(g, edge_end):
                raise MaximalityFailure(edge.id, edge_end.end)
        links.append((edge.id, (ends[0].vertex, ends[0].container), (ends[1].vertex, ends[1].container)))
    order = [(v.id, p.id) for v in g.vertices.values() for p in v.declared_peripherals]
    classes = UnionFind(order)
    for edge_id, a, b in links:
        if classes[a] == classes[b]:
            raise HypothesisFailure(edge_id, "identifications of peripherals form a cycle")
        classes.union(a, b)
    removed: List[RemovedPeripheral] = []
    skip: List[Tuple[str, str]] = []
    for component in classes.to_sets():
        if len(component) < 2:
            continue
        members = sorted(component, key=order.index)
        retained = members[0]
        conjugator: Dict[Tuple[str, str], Word] = {retained: ()}
        chain: Dict[Tuple[str, str], Tuple[str, ...]] = {retained: ()}
        queue = [retained]
        for current in queue:
            for edge_id, a, b in links:
                letter = _edge_letter(g, edge_id)
                if a == current and b not in conjugator:
                    conjugator[b] = free_reduce(conjugator[a] + letter)
                    chain[b] = chain[a] + (edge_id,)
                    queue.append(b)
                elif b == current and a not in conjugator:
                    conjugator[a] = free_reduce(conjugator[b] + tuple(invert_word(letter)))
                    chain[a] = chain[b] + (edge_id,)
                    queue.append(a)
        kept = g.peripheral(*retained)
        for member in members[1:]:
            dropped = g.peripheral(*member)
            if not _verify_chain(g, dropped, kept, conjugator[member], both_ways=True):
                raise HypothesisFailure(chain[member][-1], f"edge chain {chain[member]} does not conjugate "
                                                           f"{dropped.id} onto {kept.id}")
            removed.append(RemovedPeripheral(vertex_provenance(*member), vertex_provenance(*retained),
                                             chain[member], conjugator[member]))
            skip.append(member)
    return removed, skip


def _union_maximal_initial(g: GraphOfGroups) -> Tuple[List[RemovedPeripheral], List[Tuple[str, str]]]:
    """Maximal at the initial end: drop each outgoing container into the terminal one, if isolated."""
    removed: List[RemovedPeripheral] = []
    skip: List[Tuple[str, str]] = []
    for edge in g.edges.values():
        source, target = edge.ends["from"], edge.ends["to"]
        if not _infinite_container(g, source):
            continue
        if not _is_maximal(g, source):
            raise MaximalityFailure(edge.id, "from")
        container = g.container_of(source)
        for other in g.ends_at(source.vertex):
            if other is source or not _infinite_container(g, other):
                continue
            witness = other.image.conjugate_into(container.subgroup)
            if witness is not None:
                raise IsolationFailure((f"{edge.id}:from", f"{other.edge_id}:{other.end}"),
                                       format_word(element_word(witness)))
        retained = g.container_of(target)
        conjugator = tuple(invert_word(_edge_letter(g, edge.id)))
        if not _verify_chain(g, container, retained, conjugator, both_ways=False):
            raise HypothesisFailure(edge.id, f"{container.id} is not carried into {retained.id}")
        removed.append(RemovedPeripheral(vertex_provenance(source.vertex, container.id),
                                         vertex_provenance(target.vertex, retained.id), (edge.id,), conjugator))
        skip.append((source.vertex, container.id))
    return removed, skip


def compute_union_minus_repeats(g: GraphOfGroups, t: TreeWindow, variant: str = VARIANT_AUTO,
                                bound: int = CONJUGATOR_SEARCH_LENGTH) -> PeripheralStructure:
    """
    ⋃ ℙ_ν minus the repeats identified through edge groups. Repeats come from the edge structure,
    never from a global conjugacy search.
    """
    if variant not in UNION_VARIANTS:
        raise ValueError(f"Unknown variant: {variant!r}; expected one of {UNION_VARIANTS}")
    _require_declared(g)
    if variant == VARIANT_AUTO:
        try:
            return compute_union_minus_repeats(g, t, VARIANT_MAXIMAL_BOTH, bound)
        except (MaximalityFailure, HypothesisFailure) as e:
            logger.info(f"maximal-both variant does not apply ({type(e).__name__}: {e}); trying maximal-initial")
            return compute_union_minus_repeats(g, t, VARIANT_MAXIMAL_INITIAL, bound)
    removed, skip = _union_maximal_both(g) if variant == VARIANT_MAXIMAL_BOTH else _union_maximal_initial(g)
    bound = min(bound, t.params.L)
    members = [normalize_representative(g, m, bound) for m in _declared_members(g, skip)]
    logger.info(f"Union minus repeats ({variant}) keeps {len(members)} and removes {len(removed)} peripherals")
    return PeripheralStructure(tuple(members), variant, t.params, tuple(removed), _repeat_note(g, members, bound))


def structures_agree(first: PeripheralStructure, second: PeripheralStructure, g: GraphOfGroups,
                     bound: int = CONJUGATOR_SEARCH_LENGTH) -> bool:
    """Same infinite members up to short conjugators, by mutual membership of generators."""
    a = [m for m in first.members if not m.finite]
    b = [m for m in second.members if not m.finite]
    if len(a) != len(b):
        return False
    unmatched = list(b)
    for member in a:
        match = next((other for other in unmatched
                      if _conjugate_into(g, member, other, bound) is not None
                      and _conjugate_into(g, other, member, bound) is not None), None)
        if match is None:
            return False
        unmatched.remove(match)
    return True


# =======================================================================
# Extensions


@dataclass(frozen=True)
class ExtensionVerdict:
    holds: bool
    malnormal: bool
    malnormal_bounded: bool
    witness: Optional[str]
    kappas: Tuple[Tuple[str, WindowParams, int], ...]
    text: str


def _kappa(g: GraphOfGroups, h: TamePresentation, R: int, L: int) -> QuasiconvexWitness:
    t = build_tree_window(g, R, L)
    k, f = build_K_and_forest(g, t, L)
    kbar = quotient(k, f)
    witness = build_L(h, k, f, t, g, kbar)
    return replace(witness, kappa=measure_kappa(kbar, witness.vertices))


def _extension_malnormality(g: GraphOfGroups, ext: PeripheralStructure,
                            bound: int) -> Tuple[bool, bool, Optional[str]]:
    """
    (holds, bounded, witness). Members inside one free vertex group are checked exactly by pullbacks;
    every pair is then searched over short conjugators that leave that vertex group.
    """
    infinite = [m for m in ext.members if not m.finite]

    def free_vertex(member: PeripheralDescriptor) -> Optional[str]:
        if member.vertex is not None and g.vertex(member.vertex).group.kind == GroupKind.FREE:
            return member.vertex
        return None

    by_vertex: Dict[str, List[PeripheralDescriptor]] = {}
    for member in infinite:
        if free_vertex(member) is not None:
            by_vertex.setdefault(member.vertex, []).append(member)
    for members in by_vertex.values():
        verdict = almost_malnormal_collection([m.subgroup for m in members])
        if not verdict.holds:
            return False, False, format_word(element_word(verdict.witness))
    bounded = len(by_vertex) != 1 or len(by_vertex[next(iter(by_vertex))]) != len(infinite) or bool(g.edges)
    if not bounded:
        return True, False, None
    conjugators = short_words(g, bound)
    for first in infinite:
        if first.oracle is None:
            continue
        for second in infinite:
            shared = free_vertex(first) is not None and free_vertex(first) == free_vertex(second)
            local_symbols = set(g.vertex(first.vertex).group.symbols) if shared else set()
            for c in conjugators:
                if shared and all(s in local_symbols for s, _ in c):
                    continue
                if first is second and first.contains(c):
                    continue
                if any(first.contains(_conjugate_word(c, w)) for w in second.generators):
                    return False, True, format_word(c)
    return True, True, None


def check_extension(base: PeripheralStructure, ext: PeripheralStructure, g: GraphOfGroups,
                    windows: Sequence[Tuple[int, int]], bound: int = CONJUGATOR_SEARCH_LENGTH) -> ExtensionVerdict:
    """𝔼 extends ℙ; then (1) 𝔼 almost malnormal and (2) every E quasiconvex relative to ℙ, measured by κ."""
    for member in base.members:
        if member.finite:
            continue
        if not any(_conjugate_into(g, member, candidate, bound) is not None for candidate in ext.members):
            raise NotAnExtension(member.provenance)
    malnormal, bounded, witness = _extension_malnormality(g, ext, bound)
    kappas = []
    if malnormal:
        for member in ext.members:
            if member.tame is None or member.finite:
                continue
            for R, L in sorted(windows):
                measured = _kappa(g, member.tame, R, L)
                kappas.append((member.provenance, measured.params, measured.kappa.kappa))
    if not malnormal:
        text = f"condition (1) fails: extension is not almost malnormal, witness g={witness}"
    else:
        scope = "bounded search" if bounded else "exact"
        text = f"condition (1) holds ({scope}); condition (2) κ " + ", ".join(
            f"{p} on {params}: {kappa}" for p, params, kappa in kappas)
    return ExtensionVerdict(malnormal, malnormal, bounded, witness, tuple(kappas), text)


@dataclass(frozen=True)
class TransferVerdict:
    forward: bool
    backward: bool
    covered: Tuple[Tuple[str, str], ...]
    automatic: Tuple[Tuple[str, str], ...]
    text: str


def _same_member(a: PeripheralDescriptor, b: PeripheralDescriptor) -> bool:
    return a.provenance == b.provenance or (a.generators == b.generators and a.vertex == b.vertex)


def intersection_classes(h: TamePresentation, base: PeripheralStructure,
                         ext: PeripheralStructure) -> Tuple[List[Tuple[str, str]], List[Tuple[str, str]]]:
    """
    (needed, automatic) classes (E, coset). A whole vertex group E = G_v meets H in H_X for each
    selected X over v. Members of 𝔼 already in ℙ give parabolic intersections, witnessed by a point.
    """
    needed, automatic = [], []
    for member in ext.members:
        if member.finite:
            continue
        if any(_same_member(member, p) for p in base.members):
            automatic.append((member.provenance, "*"))
            continue
        for selected in h.selected:
            if selected.vertex == member.vertex:
                needed.append((member.provenance, format_word(selected.coset)))
    return needed, automatic


def intersection_witnesses(g: GraphOfGroups, h: TamePresentation, ext: PeripheralStructure,
                           window: Tuple[int, int]) -> Dict[Tuple[str, str], QuasiconvexWitness]:
    """A witness per selected vertex of H over each vertex-group member of 𝔼, built from that vertex alone."""
    R, L = window
    result = {}
    for member in ext.members:
        if member.vertex is None or member.finite:
            continue
        for index, selected in enumerate(h.selected):
            if selected.vertex != member.vertex:
                continue
            single = TamePresentation(f"{h.id}#{index}", (selected,))
            result[(member.provenance, format_word(selected.coset))] = _kappa(g, single, R, L)
    return result


def transfer_quasiconvexity(hw: QuasiconvexWitness, base: PeripheralStructure, ext: PeripheralStructure,
                            intersections: Mapping[Tuple[str, str], QuasiconvexWitness], g: GraphOfGroups,
                            h: TamePresentation) -> TransferVerdict:
    """
    Forward: quasiconvex relative to ℙ implies relative to 𝔼, unconditionally. Backward needs a witness for
    every in-window intersection class; parabolic classes are supplied automatically.
    """
    if [m.provenance for m in base.members] == [m.provenance for m in ext.members]:
        return TransferVerdict(True, True, (), (), "identity extension: transfer is a no-op")
    needed, automatic = intersection_classes(h, base, ext)
    for member, coset in needed:
        if (member, coset) not in intersections:
            raise MissingIntersectionWitness(member, coset)
    kappas = ", ".join(f"{member}@{coset}: κ={intersections[(member, coset)].kappa.kappa}"
                       for member, coset in needed if intersections[(member, coset)].kappa is not None)
    forward_kappa = hw.kappa.kappa if hw.kappa is not None else None
    text = (f"forward: H quasiconvex relative to the extension (κ={forward_kappa}); "
            f"backward: {len(needed)} classes witnessed, {len(automatic)} parabolic"
            + (f" ({kappas})" if kappas else ""))
    return TransferVerdict(True, True, tuple(needed), tuple(automatic), text)


# =======================================================================
# Totality coherence


@dataclass(frozen=True)
class TotalityProbe:
    edges_total: bool
    vertices_total: bool
    anomalies: Tuple[str, ...]
    params: WindowParams


def totality_probe(g: GraphOfGroups, t: TreeWindow, q: Optional[PeripheralStructure] = None,
                   bound: int = CONJUGATOR_SEARCH_LENGTH) -> TotalityProbe:
    """
    Edge totality against the vertex peripherals next to a window-scale probe of vertex groups against ℚ:
    G_v meeting a short conjugate of a member in a nontrivial proper part is reported, never raised.
    """
    q = q if q is not None else compute_Q(g, t)
    edges_total = all(
        e.image.is_total_relative([p.subgroup for p in g.vertices[e.vertex].declared_peripherals]).holds
        for edge in g.edges.values() for e in edge.ends.values())
    anomalies: List[str] = []
    conjugators = short_words(g, min(bound, t.params.L))
    for vertex in g.vertices.values():
        if vertex.group.is_finite:
            continue
        local = _local(g, vertex.id)
        sample = [x for x in enumerate_elements(vertex.group, t.params.L) if not x.is_identity()]
        for member in q.members:
            if member.oracle is None:
                continue
            for c in conjugators:
                inverse = tuple(invert_word(c))
                hits = [x for x in sample if member.contains(_conjugate_word(inverse, element_word(x)))]
                if not hits:
                    continue
                inside = all(local.local(_conjugate_word(c, w)) is not None for w in member.generators)
                if not inside:
                    anomalies.append(f"vertex {vertex.id} meets {format_word(c)}·{member.provenance}·"
                                     f"{format_word(inverse)} in a proper subgroup containing "
                                     f"{format_word(element_word(hits[0]))}")
                    break
    vertices_total = not anomalies
    if edges_total != vertices_total:
        logger.warning(f"Totality probe on {t.params}: edges total={edges_total}, vertices total={vertices_total}")
    return TotalityProbe(edges_total, vertices_total, tuple(anomalies), t.params)
