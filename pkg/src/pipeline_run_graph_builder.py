import logging
import operator
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, Optional, TypedDict

from langgraph.graph import END, StateGraph

from src.pipeline_definitions_loader import (DEFAULT_OPERATIONS_DIR, DEFAULT_PIPELINES_DIR,
                                             load_and_validate_operation_templates, load_and_validate_pipelines)
from src.pipeline_types import (ANY_VALUE, END_NODE, INITIAL_STATE_FIELDS, REPORT_BLOCKS_FIELD, CheckTemplate,
                                ConstructionTemplate, ExportTemplate, OperationTemplate, Pipeline, PipelineStep)
from src.toolkit_operations import OPERATION_FUNCTIONS

logger = logging.getLogger(__name__)


def build_run_graph(operations_dir: Path | str = DEFAULT_OPERATIONS_DIR,
                    pipelines_dir: Path | str = DEFAULT_PIPELINES_DIR) -> Dict[str, Any]:
    templates = load_and_validate_operation_templates(operations_dir)
    pipelines = load_and_validate_pipelines(templates, pipelines_dir)
    return _build_run_graph_for_pipelines(pipelines, templates)


def _build_run_graph_for_pipelines(pipelines: Dict[str, Pipeline], templates: Dict[str, OperationTemplate]):
    return {name: _build_run_graph_for_pipeline(pipeline, templates) for name, pipeline in pipelines.items()}


def _build_run_graph_for_pipeline(pipeline: Pipeline, templates: Dict[str, OperationTemplate]):
    """Compile a LangGraph StateGraph executing one command pipeline."""
    graph_builder = StateGraph(_create_pipeline_state_schema(pipeline))

    for step in pipeline.steps:
        template = templates[step.operation_template_name]
        graph_builder.add_node(step.step_name, _get_node_function_by_type(template, step))

    graph_builder.set_entry_point(pipeline.steps[0].step_name)

    for i, step in enumerate(pipeline.steps):
        if step.next_step_mapping:
            edge_mapping = {name: END if name == END_NODE else name for name in step.next_step_mapping.values()}
            edge_mapping[END_NODE] = END
            graph_builder.add_conditional_edges(step.step_name, _create_routing_func(step), edge_mapping)
        elif i + 1 < len(pipeline.steps):
            graph_builder.add_edge(step.step_name, pipeline.steps[i + 1].step_name)
        else:
            graph_builder.add_edge(step.step_name, END)

    return graph_builder.compile()

# =======================================================================


def _create_pipeline_state_schema(pipeline: Pipeline) -> type:
    """
    TypedDict over every state field the pipeline touches. Steps append to the report blocks,
    so that field gets a list-concatenating reducer; every other field is last-write-wins.
    """
    fields = set(INITIAL_STATE_FIELDS)
    for step in pipeline.steps:
        fields.update(step.input_fields_mapping.values())
        fields.update(step.output_fields_mapping.values())
    field_dict: Dict[str, Any] = {name: Any for name in sorted(fields)}
    field_dict[REPORT_BLOCKS_FIELD] = Annotated[list, operator.add]
    return TypedDict("PipelineState", field_dict, total=False)


def _skipped_outputs(step: PipelineStep) -> Dict[str, Any]:
    return {field: [] if field == REPORT_BLOCKS_FIELD else None for field in step.output_fields_mapping.values()}


def _conditions_hold(step: PipelineStep, state: Dict[str, Any]) -> bool:
    if not step.input_conditions:
        return True
    return all(state.get(field) == expected for field, expected in step.input_conditions.items())


def _start_graph_node_processing(step: PipelineStep, state: Dict[str, Any]) -> Dict[str, Any]:
    logger.info(f"Started step: {step.step_name}")
    return {template_field: state.get(state_field) for template_field, state_field in step.input_fields_mapping.items()}


def _finish_graph_node_processing(step: PipelineStep, outputs: Dict[str, Any]) -> Dict[str, Any]:
    result = {}
    for template_field, state_field in step.output_fields_mapping.items():
        value = outputs.get(template_field)
        result[state_field] = ([] if value is None else value) if state_field == REPORT_BLOCKS_FIELD else value
    return result

# =======================================================================


def _create_operation_node(step: PipelineStep, template: OperationTemplate,
                           extra_inputs: Optional[Dict[str, Any]] = None) -> Callable:
    if template.function_name not in OPERATION_FUNCTIONS:
        raise ValueError(f"Step {step.step_name!r}: no operation function named {template.function_name!r}")
    function = OPERATION_FUNCTIONS[template.function_name]

    def operation_node(state: Dict[str, Any]) -> Dict[str, Any]:
        if not _conditions_hold(step, state):
            logger.info(f"Skipped step: {step.step_name} (input conditions {step.input_conditions})")
            return _skipped_outputs(step)
        inputs = _start_graph_node_processing(step, state)
        inputs.update(extra_inputs or {})
        return _finish_graph_node_processing(step, function(inputs))

    return operation_node


def _create_check_node(step: PipelineStep, template: CheckTemplate) -> Callable:
    run = _create_operation_node(step, template)

    def check_node(state: Dict[str, Any]) -> Dict[str, Any]:
        result = run(state)
        status_field = step.output_fields_mapping[template.status_field]
        if result.get(status_field) is not None:
            logger.info(f"Check {step.step_name}: {result[status_field]}")
        return result

    return check_node


def _create_export_node(step: PipelineStep, template: ExportTemplate) -> Callable:
    return _create_operation_node(step, template, {"file_suffix": template.file_suffix})

# =======================================================================


def _get_node_function_by_type(template: OperationTemplate, step: PipelineStep) -> Callable:
    if isinstance(template, CheckTemplate):
        return _create_check_node(step, template)
    elif isinstance(template, ExportTemplate):
        return _create_export_node(step, template)
    elif isinstance(template, ConstructionTemplate):
        return _create_operation_node(step, template)
    else:
        raise ValueError(f"Unknown template type: {type(template)}")


def _create_routing_func(step: PipelineStep) -> Callable:
    def route(state: Dict[str, Any]) -> str:
        if step.output_field_for_next_step_mapping is not None:
            state_field = step.output_fields_mapping[step.output_field_for_next_step_mapping]
            value = str(state.get(state_field, ""))
        else:
            value = ANY_VALUE
        return step.next_step_mapping.get(value) or step.next_step_mapping.get(ANY_VALUE) or END_NODE
    return route
