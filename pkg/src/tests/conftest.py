"""
Pytest fixtures and configuration for toolkit tests
"""
import json
import pytest
from pathlib import Path
from typing import Dict, Any, Callable, Tuple
from functools import lru_cache
import tempfile
import shutil

from src.bass_serre import TreeWindow, build_tree_window
from src.fine_graph import FineGraphWindow, ParabolicForest, QuotientGraph, build_K_and_forest, quotient
from src.graph_of_groups import GraphOfGroups
from src.graph_of_groups_loader import DEFAULT_FIXTURES_DIR, load_fixture


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def fixtures_dir() -> Path:
    return DEFAULT_FIXTURES_DIR


@pytest.fixture
def example_hnn() -> GraphOfGroups:
    """F(a,b) with peripheral ⟨ab⟩ and t(ab)²t⁻¹ = (ab)³"""
    return load_fixture("example_hnn")


ExampleWindow = Tuple[GraphOfGroups, TreeWindow, FineGraphWindow, ParabolicForest, QuotientGraph]


@pytest.fixture(scope="session")
def example_window() -> Callable[[int, int], ExampleWindow]:
    """Tree window, K, forest and K̄ of the HNN example, built once per (R, L) for the whole session"""
    @lru_cache(maxsize=None)
    def build(R: int, L: int):
        g = load_fixture("example_hnn")
        t = build_tree_window(g, R, L)
        k, f = build_K_and_forest(g, t, L)
        return g, t, k, f, quotient(k, f)
    return build


@pytest.fixture
def free_product() -> GraphOfGroups:
    """F(a) * F(b) over the trivial group"""
    return load_fixture("free_product")


@pytest.fixture
def sample_graph_of_groups() -> Dict[str, Any]:
    """Amalgam of two free groups over ⟨z⟩ with declared containers at both ends"""
    return {
        "vertices": {
            "v1": {
                "group": {"kind": "free", "symbols": ["a", "b"]},
                "peripherals": [{"id": "Pa", "generators": ["a"]}, {"id": "Pb", "generators": ["b"]}]
            },
            "v2": {
                "group": {"kind": "free", "symbols": ["c", "d"]},
                "peripherals": [{"id": "Pc", "generators": ["c"]}]
            }
        },
        "edges": {
            "e": {
                "group": {"kind": "free", "symbols": ["z"]},
                "from": "v1",
                "to": "v2",
                "from_map": {"z": "b"},
                "to_map": {"z": "c"},
                "from_container": "Pb",
                "to_container": "Pc"
            }
        },
        "spanning_tree": ["e"]
    }


@pytest.fixture
def write_input(temp_dir) -> Callable[[Dict[str, Any], str], Path]:
    """Write a graph-of-groups dict to a JSON file in the temporary directory"""
    def write(data: Dict[str, Any], name: str = "input.json") -> Path:
        path = temp_dir / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path
    return write


@pytest.fixture
def sample_construction_template() -> Dict[str, Any]:
    """Sample construction operation template for testing"""
    return {
        "template_name": "test_build",
        "type": "construction",
        "description": "Test construction",
        "input_fields": ["config"],
        "output_fields": ["graph", "blocks"],
        "function_name": "load_input"
    }


@pytest.fixture
def sample_check_template() -> Dict[str, Any]:
    """Sample check operation template for testing"""
    return {
        "template_name": "test_check",
        "type": "check",
        "description": "Test check",
        "input_fields": ["graph", "config"],
        "output_fields": ["validation", "status", "blocks"],
        "function_name": "validate_graph"
    }


@pytest.fixture
def sample_export_template() -> Dict[str, Any]:
    """Sample export operation template for testing"""
    return {
        "template_name": "test_export",
        "type": "export",
        "description": "Test export",
        "input_fields": ["tree", "config"],
        "output_fields": ["files", "blocks"],
        "function_name": "export_tree",
        "file_suffix": ".gv"
    }


@pytest.fixture
def sample_pipeline() -> Dict[str, Any]:
    """Sample pipeline definition for testing"""
    return {
        "pipeline_name": "test_pipeline",
        "version": "1.0.0",
        "steps": [
            {
                "step_name": "load",
                "operation_template_name": "test_build",
                "input_fields_mapping": {"config": "config"},
                "output_fields_mapping": {"graph": "graph", "blocks": "report_blocks"}
            }
        ]
    }


@pytest.fixture
def sample_pipeline_with_check(sample_pipeline) -> Dict[str, Any]:
    """Sample pipeline with a check step routing on its status"""
    pipeline = json.loads(json.dumps(sample_pipeline))
    pipeline["pipeline_name"] = "test_pipeline_check"
    pipeline["steps"].append({
        "step_name": "check",
        "operation_template_name": "test_check",
        "input_fields_mapping": {"graph": "graph", "config": "config"},
        "output_fields_mapping": {"validation": "validation", "status": "validation_status",
                                  "blocks": "report_blocks"},
        "output_field_for_next_step_mapping": "status",
        "next_step_mapping": {"ok": "load_again", "failed": "__end__"}
    })
    pipeline["steps"].append({
        "step_name": "load_again",
        "operation_template_name": "test_build",
        "input_fields_mapping": {"config": "config"},
        "output_fields_mapping": {"graph": "second_graph", "blocks": "report_blocks"}
    })
    return pipeline


@pytest.fixture
def create_temp_operation_templates(temp_dir, sample_construction_template, sample_check_template,
                                    sample_export_template):
    """Create temporary operation template files"""
    operations_dir = temp_dir / "operations"
    operations_dir.mkdir()
    (operations_dir / "build.json").write_text(json.dumps(sample_construction_template))
    (operations_dir / "check.json").write_text(json.dumps(sample_check_template))
    (operations_dir / "export.json").write_text(json.dumps(sample_export_template))
    return operations_dir


@pytest.fixture
def create_temp_pipelines(temp_dir, sample_pipeline, sample_pipeline_with_check):
    """Create temporary pipeline files"""
    pipelines_dir = temp_dir / "pipelines"
    pipelines_dir.mkdir()
    (pipelines_dir / "test_pipeline.json").write_text(json.dumps(sample_pipeline))
    (pipelines_dir / "test_pipeline_check.json").write_text(json.dumps(sample_pipeline_with_check))
    return pipelines_dir
