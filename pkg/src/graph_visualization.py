"""
DOT renderings of the toolkit's constructions: core graphs, tree windows, K, K̄ (with an L̄ highlight)
and the parabolic forest. Nodes and edges are written in sorted order, so files are byte-identical across runs.
"""
import logging
from pathlib import Path
from typing import Any, Collection, Hashable, List, Optional, Tuple, Union

import networkx as nx

from src.bass_serre import TreeWindow
from src.fine_graph import EDGE_EDGE_SPACE, KIND_CONE, KIND_PORT, FineGraphWindow, ParabolicForest, QuotientGraph
from src.quasiconvex import QuasiconvexWitness
from src.stallings import CoreGraph
from src.toolkit_errors import IoError

logger = logging.getLogger(__name__)

Artifact = Union[CoreGraph, TreeWindow, FineGraphWindow, QuotientGraph, ParabolicForest]


def _quote(value: Any) -> str:
    text = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def _attributes(pairs: List[Tuple[str, Any]]) -> str:
    return ", ".join(f"{key}={_quote(value)}" for key, value in pairs)


def _node_line(node: Hashable, label: str, kind: Optional[str] = None, highlight: bool = False) -> str:
    pairs: List[Tuple[str, Any]] = [("label", label)]
    if kind == KIND_CONE:
        pairs.append(("shape", "diamond"))
    elif kind == KIND_PORT:
        pairs.append(("shape", "box"))
    if highlight:
        pairs.extend([("style", "filled"), ("fillcolor", "lightblue")])
    return f"\t{_quote(node)} [{_attributes(pairs)}];"


def core_graph_to_dot(core: CoreGraph, name: str = "core") -> str:
    lines = [f"digraph {_quote(name)} {{"]
    for vertex in range(core.vertex_count):
        shape = "doublecircle" if vertex == 0 else "circle"
        lines.append(f"\t{_quote(vertex)} [{_attributes([('label', vertex), ('shape', shape)])}];")
    for index, (u, symbol, v) in sorted(enumerate(core.edges), key=lambda item: (item[1][0], item[1][1], item[1][2])):
        label = symbol if core.outputs is None else f"{symbol} / {core.outputs[index]}"
        lines.append(f"\t{_quote(u)} -> {_quote(v)} [{_attributes([('label', label)])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_window_to_dot(t: TreeWindow, name: str = "tree") -> str:
    lines = [f"graph {_quote(name)} {{", f"\tlabel={_quote(t.params)};"]
    for v in t.vertices:
        lines.append(_node_line(v.index, t.label(v.index)))
    for e in sorted(t.edges, key=lambda e: e.index):
        lines.append(f"\t{_quote(e.parent)} -- {_quote(e.child)} [{_attributes([('label', e.edge)])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _undirected_edges(graph: nx.Graph) -> List[Tuple[Hashable, Hashable, dict]]:
    return sorted(((min(u, v), max(u, v), data) for u, v, data in graph.edges(data=True)),
                  key=lambda item: (item[0], item[1]))


def fine_graph_to_dot(k: FineGraphWindow, name: str = "K") -> str:
    lines = [f"graph {_quote(name)} {{", f"\tlabel={_quote(k.params)};"]
    for node in sorted(k.graph.nodes):
        data = k.graph.nodes[node]
        lines.append(_node_line(node, f"{data['copy']}:{data['label']}", data["kind"]))
    for u, v, data in _undirected_edges(k.graph):
        style = "dashed" if data["kind"] == EDGE_EDGE_SPACE else "solid"
        lines.append(f"\t{_quote(u)} -- {_quote(v)} [{_attributes([('style', style)])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def quotient_to_dot(kbar: QuotientGraph, name: str = "Kbar", highlight: Collection[int] = ()) -> str:
    """Collapsed classes are labelled S<component>; L̄ vertices and the edges between them are filled."""
    chosen = set(highlight)
    lines = [f"graph {_quote(name)} {{", f"\tlabel={_quote(kbar.params)};"]
    for node in sorted(kbar.graph.nodes):
        data = kbar.graph.nodes[node]
        lines.append(_node_line(node, data["label"], data["kind"], node in chosen))
    for u, v, _ in _undirected_edges(kbar.graph):
        pairs: List[Tuple[str, Any]] = []
        if u in chosen and v in chosen:
            pairs.extend([("color", "blue"), ("penwidth", 2)])
        suffix = f" [{_attributes(pairs)}]" if pairs else ""
        lines.append(f"\t{_quote(u)} -- {_quote(v)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def forest_to_dot(f: ParabolicForest, name: str = "forest") -> str:
    lines = [f"graph {_quote(name)} {{"]
    for node in sorted(f.graph.nodes):
        vertex = f.vertices[node]
        label = f"C{f.component_of[node]} {vertex.copy}:{vertex.peripheral}@{vertex.rep}"
        lines.append(_node_line(node, label, KIND_PORT if vertex.port else KIND_CONE))
    for u, v, data in _undirected_edges(f.graph):
        lines.append(f"\t{_quote(u)} -- {_quote(v)} [{_attributes([('label', data['tree_edge'])])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dot(artifact: Artifact, name: Optional[str] = None, witness: Optional[QuasiconvexWitness] = None) -> str:
    if isinstance(artifact, CoreGraph):
        return core_graph_to_dot(artifact, name or "core")
    if isinstance(artifact, TreeWindow):
        return tree_window_to_dot(artifact, name or "tree")
    if isinstance(artifact, FineGraphWindow):
        return fine_graph_to_dot(artifact, name or "K")
    if isinstance(artifact, QuotientGraph):
        return quotient_to_dot(artifact, name or "Kbar", witness.vertices if witness is not None else ())
    if isinstance(artifact, ParabolicForest):
        return forest_to_dot(artifact, name or "forest")
    raise TypeError(f"Cannot render {type(artifact).__name__} as DOT")


def export_dot(artifact: Artifact, path: Union[str, Path], name: Optional[str] = None,
               witness: Optional[QuasiconvexWitness] = None) -> str:
    """
    Write the DOT rendering of a construction.

    Args:
        artifact: core graph, tree window, K, K̄ or parabolic forest
        path: file to write; missing parent directories are created
        name: graph name inside the file
        witness: L̄ to highlight when rendering K̄

    Returns:
        Absolute path of the written file
    """
    output_path = Path(path)
    text = to_dot(artifact, name, witness)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot write DOT file {output_path}: {e}") from e
    logger.info(f"Wrote {output_path}")
    return str(output_path.absolute())
