"""
Unit tests for pipeline_types.py
"""
import pytest
from pathlib import Path
from pydantic import ValidationError

from src.pipeline_types import MAX_GEODESICS_ENV, Pipeline, PipelineStep, RunConfig
from src.quasiconvex import DEFAULT_GEODESIC_CAP


class TestRunConfig:
    """Tests for RunConfig validation and derived values"""

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(MAX_GEODESICS_ENV, raising=False)
        config = RunConfig(input_path=Path("g.json"), command="tree")

        assert (config.tree_radius, config.word_window, config.circuit_bound) == (2, 3, 4)
        assert config.max_geodesics == DEFAULT_GEODESIC_CAP
        assert config.report_path == Path("out") / "tree.report.txt"

    @pytest.mark.parametrize("field, value, message", [
        ("tree_radius", -1, "tree radius R must be >= 0"),
        ("word_window", 0, "word window L must be >= 1"),
        ("circuit_bound", 2, "circuit bound n must be >= 3"),
        ("stability_step", 0, "stability step must be >= 1"),
        ("command", "draw", "Unknown command 'draw'"),
    ])
    def test_invalid_values(self, field, value, message):
        with pytest.raises(ValidationError, match=message):
            RunConfig(**{"input_path": Path("g.json"), "command": "tree", field: value})

    def test_geodesic_cap_from_environment(self, monkeypatch):
        monkeypatch.setenv(MAX_GEODESICS_ENV, "500")

        assert RunConfig(input_path=Path("g.json"), command="qc").max_geodesics == 500

    def test_geodesic_cap_not_an_integer(self, monkeypatch):
        monkeypatch.setenv(MAX_GEODESICS_ENV, "lots")

        with pytest.raises(ValueError, match="must be an integer"):
            RunConfig(input_path=Path("g.json"), command="qc")

    def test_windows_shrink_towards_the_configured_one(self):
        config = RunConfig(input_path=Path("g.json"), command="qc", tree_radius=3, word_window=6,
                           stability_step=3)

        assert config.windows() == [(1, 4), (2, 5), (3, 6)]

    def test_windows_are_deduplicated_at_the_bottom(self):
        config = RunConfig(input_path=Path("g.json"), command="qc", tree_radius=0, word_window=1,
                           stability_step=2)

        assert config.windows() == [(0, 1)]


class TestPipelineModels:
    """Tests for PipelineStep and Pipeline validators"""

    def test_routing_field_must_be_an_output(self):
        with pytest.raises(ValidationError, match="must be one of output_fields_mapping"):
            PipelineStep(step_name="s", operation_template_name="t",
                         input_fields_mapping={"a": "a"}, output_fields_mapping={"b": "b"},
                         output_field_for_next_step_mapping="c", next_step_mapping={"x": "__end__"})

    def test_routing_without_field_needs_any_value(self):
        with pytest.raises(ValidationError, match="has no __any__ value option"):
            PipelineStep(step_name="s", operation_template_name="t",
                         input_fields_mapping={"a": "a"}, output_fields_mapping={"b": "b"},
                         next_step_mapping={"x": "__end__"})

    def test_two_fields_to_one_state_field(self):
        with pytest.raises(ValidationError, match="must not map two fields to the same state field"):
            PipelineStep(step_name="s", operation_template_name="t",
                         input_fields_mapping={"a": "x", "b": "x"}, output_fields_mapping={"c": "c"})

    def test_duplicate_step_names(self, sample_pipeline):
        sample_pipeline["steps"].append(dict(sample_pipeline["steps"][0]))

        with pytest.raises(ValidationError, match="step_name values within a pipeline must be unique"):
            Pipeline.model_validate(sample_pipeline)

    def test_empty_pipeline(self):
        with pytest.raises(ValidationError, match="at least one step"):
            Pipeline(pipeline_name="p", version="1", steps=[])
