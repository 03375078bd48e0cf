from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.group_kernel import GroupDesc, GroupKind

# Input file models. Structural checks (ids, references, key sets) live here;
# algebraic checks (monomorphisms, containers, connectivity) are done by graph_of_groups.validate.

TRIVIAL_PERIPHERAL = "__trivial__"
END_FROM = "from"
END_TO = "to"
EDGE_ENDS = (END_FROM, END_TO)


class GroupSpec(BaseModel):
    kind: GroupKind
    rank: Optional[int] = None
    symbols: List[str] = []
    torsion: List[int] = []
    table: List[List[int]] = []

    @model_validator(mode="after")
    def rank_matches_symbols(self) -> "GroupSpec":
        if self.rank is not None and self.rank != self.to_desc().rank:
            raise ValueError(f"declared rank {self.rank} does not match the group's rank {self.to_desc().rank}")
        return self

    def to_desc(self) -> GroupDesc:
        return GroupDesc(kind=self.kind, symbols=tuple(self.symbols), torsion=tuple(self.torsion),
                         table=tuple(tuple(row) for row in self.table))

    def is_trivial(self) -> bool:
        if self.kind == GroupKind.FINITE:
            return len(self.symbols) == 1
        return not self.symbols


class PeripheralSpec(BaseModel):
    id: str
    generators: List[str]

    @field_validator("id")
    @classmethod
    def id_not_reserved(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("peripheral id must not be empty")
        if v == TRIVIAL_PERIPHERAL:
            raise ValueError(f"peripheral id {TRIVIAL_PERIPHERAL!r} is reserved")
        return v


class VertexSpec(BaseModel):
    group: GroupSpec
    peripherals: List[PeripheralSpec] = []

    @field_validator("peripherals")
    @classmethod
    def unique_peripheral_ids(cls, v: List[PeripheralSpec]) -> List[PeripheralSpec]:
        ids = [p.id for p in v]
        if len(set(ids)) != len(ids):
            raise ValueError(f"peripheral ids must be unique; got {ids}")
        return v


class EdgeSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    group: GroupSpec
    source: str = Field(alias="from")
    target: str = Field(alias="to")
    from_map: Dict[str, str]
    to_map: Dict[str, str]
    # None means "not declared" (criterion route); trivial edge groups default to the trivial peripheral
    from_container: Optional[str] = None
    to_container: Optional[str] = None
    stable_letter: Optional[str] = None

    @model_validator(mode="after")
    def maps_cover_edge_generators(self) -> "EdgeSpec":
        symbols = set(self.group.symbols)
        for name in ("from_map", "to_map"):
            keys = set(getattr(self, name))
            if keys != symbols:
                raise ValueError(f"{name} must give an image for exactly the edge group symbols {sorted(symbols)}; "
                                 f"got {sorted(keys)}")
        if self.group.is_trivial():
            self.from_container = self.from_container or TRIVIAL_PERIPHERAL
            self.to_container = self.to_container or TRIVIAL_PERIPHERAL
        return self

    def endpoint(self, end: str) -> str:
        return self.source if end == END_FROM else self.target

    def injection_map(self, end: str) -> Dict[str, str]:
        return self.from_map if end == END_FROM else self.to_map

    def container(self, end: str) -> Optional[str]:
        return self.from_container if end == END_FROM else self.to_container


class TameVertexSpec(BaseModel):
    coset: str = "1"  # G-word g; the selected tree vertex is g·G_vertex
    vertex: str
    generators: List[str]  # words in the vertex group


class TamePresentationSpec(BaseModel):
    id: str
    selected: List[TameVertexSpec]
    connecting: List[str] = []  # G-words

    @field_validator("selected")
    @classmethod
    def at_least_one_selected(cls, v: List[TameVertexSpec]) -> List[TameVertexSpec]:
        if not v:
            raise ValueError("a tame presentation selects at least one tree vertex")
        return v


class GraphOfGroupsSpec(BaseModel):
    vertices: Dict[str, VertexSpec]
    edges: Dict[str, EdgeSpec] = {}
    spanning_tree: List[str] = []
    tame_presentations: List[TamePresentationSpec] = []

    @field_validator("vertices")
    @classmethod
    def at_least_one_vertex(cls, v: Dict[str, VertexSpec]) -> Dict[str, VertexSpec]:
        if not v:
            raise ValueError("a graph of groups needs at least one vertex")
        return v

    @model_validator(mode="after")
    def validate_references(self) -> "GraphOfGroupsSpec":
        for edge_id, edge in self.edges.items():
            for end in EDGE_ENDS:
                vertex_id = edge.endpoint(end)
                if vertex_id not in self.vertices:
                    raise ValueError(f"edge {edge_id!r} ends at unknown vertex {vertex_id!r}")
        tree = set(self.spanning_tree)
        if len(tree) != len(self.spanning_tree):
            raise ValueError(f"spanning_tree must not contain duplicates; got {self.spanning_tree}")
        unknown = tree - set(self.edges)
        if unknown:
            raise ValueError(f"spanning_tree mentions unknown edges {sorted(unknown)}")
        for edge_id, edge in self.edges.items():
            if edge_id in tree and edge.stable_letter:
                raise ValueError(f"tree edge {edge_id!r} must not carry a stable letter")
            if edge_id not in tree and not edge.stable_letter:
                raise ValueError(f"edge {edge_id!r} is not in the spanning tree and needs a stable_letter")
        ids = [p.id for p in self.tame_presentations]
        if len(set(ids)) != len(ids):
            raise ValueError(f"tame presentation ids must be unique; got {ids}")
        for presentation in self.tame_presentations:
            for selected in presentation.selected:
                if selected.vertex not in self.vertices:
                    raise ValueError(f"tame presentation {presentation.id!r} selects unknown vertex {selected.vertex!r}")
        self._validate_global_symbols()
        return self

    def _validate_global_symbols(self) -> None:
        seen: Dict[str, str] = {}
        for vertex_id, vertex in self.vertices.items():
            for symbol in vertex.group.symbols:
                if symbol in seen:
                    raise ValueError(f"symbol {symbol!r} of vertex {vertex_id!r} is already used by {seen[symbol]}")
                seen[symbol] = f"vertex {vertex_id!r}"
        for edge_id, edge in self.edges.items():
            if edge.stable_letter:
                if edge.stable_letter in seen:
                    raise ValueError(f"stable letter {edge.stable_letter!r} of edge {edge_id!r} "
                                     f"is already used by {seen[edge.stable_letter]}")
                if not edge.stable_letter[0].isalpha() or not edge.stable_letter.replace("_", "").isalnum():
                    raise ValueError(f"Invalid stable letter: {edge.stable_letter!r}")
                seen[edge.stable_letter] = f"edge {edge_id!r}"
