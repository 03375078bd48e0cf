from __future__ import annotations

import json
import logging
from pathlib import Path

from src.graph_of_groups import GraphOfGroups
from src.graph_of_groups_types import GraphOfGroupsSpec
from src.toolkit_errors import ParseError

logger = logging.getLogger(__name__)

DEFAULT_FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"


def load_graph_of_groups_spec(path: Path | str) -> GraphOfGroupsSpec:
    """
    Read and validate a graph-of-groups JSON file.
    Raises FileNotFoundError, ParseError (with the decoder's line/column) or pydantic ValidationError.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Graph of groups file does not exist: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as ex:
        raise ParseError(f"Invalid JSON in {path}: {ex.msg}", line=ex.lineno, column=ex.colno) from ex
    return GraphOfGroupsSpec.model_validate(raw)


def load_graph_of_groups(path: Path | str) -> GraphOfGroups:
    spec = load_graph_of_groups_spec(path)
    graph = GraphOfGroups(spec)
    logger.info(f"Loaded graph of groups from {path}: {len(graph.vertices)} vertices, {len(graph.edges)} edges")
    return graph


def load_fixture(name: str, directory: Path | str = DEFAULT_FIXTURES_DIR) -> GraphOfGroups:
    """Load one of the bundled example inputs by file stem."""
    return load_graph_of_groups(Path(directory) / f"{name}.json")
