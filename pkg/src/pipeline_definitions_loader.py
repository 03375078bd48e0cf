from __future__ import annotations
from typing import Dict
import json
from pathlib import Path

from src.pipeline_types import (INITIAL_STATE_FIELDS, CheckTemplate, OperationTemplate, Pipeline,
                                parse_and_validate_operation_template)

DEFAULT_OPERATIONS_DIR = Path(__file__).resolve().parent / "operations"
DEFAULT_PIPELINES_DIR = Path(__file__).resolve().parent / "pipelines"


def load_and_validate_operation_templates(directory: Path | str = DEFAULT_OPERATIONS_DIR) -> Dict[str, OperationTemplate]:
    """
    Load and validate all operation templates from JSON files in a directory
    Returns:
        dict[template_name, OperationTemplate]
    """
    path = Path(directory)
    if not path.exists():
        raise FileNotFoundError(f"Operation templates directory does not exist: {path}")
    templates: Dict[str, OperationTemplate] = {}
    for json_path in sorted(path.glob("*.json")):
        raw = json.loads(json_path.read_text(encoding="utf-8"))
        tmpl = parse_and_validate_operation_template(raw)
        if tmpl.template_name in templates:
            raise ValueError(f"Duplicate operation template_name={tmpl.template_name!r} found in {json_path} (already defined)")
        templates[tmpl.template_name] = tmpl
    return templates


def validate_pipeline_against_templates(pipeline: Pipeline, templates: Dict[str, OperationTemplate]) -> None:
    """
    Validate a pipeline against operation templates.

    Checks:
    - Every step.operation_template_name exists in *templates*.
    - step.input_fields_mapping covers exactly template.input_fields
    - step.output_fields_mapping covers exactly template.output_fields
    - check steps route on their template's status field
    - every state field a step reads is in the initial state or written by an earlier step
    """
    for step in pipeline.steps:
        if step.operation_template_name not in templates:
            raise ValueError(
                f"Pipeline {pipeline.pipeline_name!r} step {step.step_name!r} "
                f"references unknown operation_template_name={step.operation_template_name!r}"
            )

        tmpl = templates[step.operation_template_name]
        if set(step.input_fields_mapping.keys()) != set(tmpl.input_fields):
            raise ValueError(f"Pipeline {pipeline.pipeline_name!r} step {step.step_name!r}: Mismatched input_fields_mapping keys for template {tmpl.template_name!r}. ")

        if set(step.output_fields_mapping.keys()) != set(tmpl.output_fields):
            raise ValueError(f"Pipeline {pipeline.pipeline_name!r} step {step.step_name!r}: Mismatched output_fields_mapping keys for template {tmpl.template_name!r}. ")

        if isinstance(tmpl, CheckTemplate) and step.next_step_mapping \
                and step.output_field_for_next_step_mapping != tmpl.status_field:
            raise ValueError(f"Pipeline {pipeline.pipeline_name!r} step {step.step_name!r} must route on "
                             f"{tmpl.status_field!r}; got {step.output_field_for_next_step_mapping!r}")

    available = set(INITIAL_STATE_FIELDS)
    for step in pipeline.steps:
        missing = set(step.input_fields_mapping.values()) - available
        if missing:
            raise ValueError(f"Pipeline {pipeline.pipeline_name!r} step {step.step_name!r} reads {sorted(missing)} "
                             f"before any step writes them")
        available.update(step.output_fields_mapping.values())


def load_and_validate_pipelines(templates: Dict[str, OperationTemplate], directory: Path | str = DEFAULT_PIPELINES_DIR) -> Dict[str, Pipeline]:
    """
    Load and validate all pipelines from JSON files in *directory*.

    Returns:
        dict[pipeline_name, Pipeline]
    Also cross-validates each pipeline against the given operation templates.
    """
    path = Path(directory)
    if not path.exists():
        raise FileNotFoundError(f"Pipelines directory does not exist: {path}")
    pipelines: Dict[str, Pipeline] = {}
    for json_path in sorted(path.glob("*.json")):
        raw = json.loads(json_path.read_text(encoding="utf-8"))
        pipeline = Pipeline.model_validate(raw)
        if pipeline.pipeline_name in pipelines:
            raise ValueError(f"Duplicate pipeline_name={pipeline.pipeline_name!r} found in {json_path} (already defined)")

        validate_pipeline_against_templates(pipeline, templates)
        pipelines[pipeline.pipeline_name] = pipeline

    return pipelines
