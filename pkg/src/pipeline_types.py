from __future__ import annotations

import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from src.quasiconvex import DEFAULT_GEODESIC_CAP

# Pipelines, OperationTemplates and Steps in a pipeline definition.
# Validation is applied within the object definitions; cross-object checks (templates referenced by steps,
# field mappings against template fields) are done by the loading code.

ANY_VALUE = "__any__"
END_NODE = "__end__"
STATUS_OK = "ok"
STATUS_FAILED = "failed"
REPORT_BLOCKS_FIELD = "report_blocks"
INITIAL_STATE_FIELDS = ("config", "input_path", "export_dot", REPORT_BLOCKS_FIELD)

COMMANDS = ("validate", "tree", "fine", "quotient", "peripherals", "parabolic-trees", "qc", "hypotheses")
MAX_GEODESICS_ENV = "BSK_MAX_GEODESICS"
LOG_LEVEL_ENV = "BSK_LOG_LEVEL"


class OperationTypes(str, Enum):
    CONSTRUCTION = "construction"
    CHECK = "check"
    EXPORT = "export"


class OperationTemplateBase(BaseModel):
    """
    Common fields for all operation templates.
    """
    template_name: str
    type: OperationTypes
    description: Optional[str] = None
    function_name: str
    input_fields: List[str]
    output_fields: List[str]

    @field_validator("template_name", "function_name")
    @classmethod
    def non_empty(cls, v: str, info) -> str:
        if not v.strip():
            raise ValueError(f"{info.field_name} must not be empty")
        return v

    @field_validator("input_fields", "output_fields")
    @classmethod
    def fields_non_empty(cls, v: List[str], info) -> List[str]:
        if not v:
            raise ValueError(f"{info.field_name} must contain at least one item")
        if len(set(v)) != len(v):
            raise ValueError(f"{info.field_name} must not contain duplicates")
        return v

    @model_validator(mode="after")
    def no_overlap_between_input_and_output(self) -> "OperationTemplateBase":
        overlap = set(self.input_fields) & set(self.output_fields)
        if overlap:
            raise ValueError(
                f"input_fields and output_fields must not overlap; got duplicates: {overlap}"
            )
        return self


# =======================================================================


class ConstructionTemplate(OperationTemplateBase):
    pass


class CheckTemplate(OperationTemplateBase):
    status_field: str = "status"

    @model_validator(mode="after")
    def status_is_an_output(self) -> "CheckTemplate":
        if self.status_field not in self.output_fields:
            raise ValueError(f"status_field={self.status_field!r} must be one of output_fields={self.output_fields}")
        return self


class ExportTemplate(OperationTemplateBase):
    file_suffix: str = ".dot"

    @field_validator("file_suffix")
    @classmethod
    def starts_with_dot(cls, v: str) -> str:
        if not v.startswith("."):
            raise ValueError(f"file_suffix must start with '.'; got {v!r}")
        return v


OperationTemplate = Union[ConstructionTemplate, CheckTemplate, ExportTemplate]

TEMPLATE_TYPE_MAP = {
    OperationTypes.CONSTRUCTION: ConstructionTemplate,
    OperationTypes.CHECK: CheckTemplate,
    OperationTypes.EXPORT: ExportTemplate,
}

# =======================================================================


def parse_and_validate_operation_template(raw: dict) -> OperationTemplate:
    t = raw.get("type")
    if t not in TEMPLATE_TYPE_MAP:
        raise ValueError(f"Unknown operation template type: {t!r}")
    cls = TEMPLATE_TYPE_MAP[t]
    return cls.model_validate(raw)

# =======================================================================


class PipelineStep(BaseModel):
    """
    A single step instance in a pipeline.
    Ties an operation_template_name + wiring of inputs/outputs + routing.
    """
    step_name: str  # name in this pipeline
    operation_template_name: str

    input_fields_mapping: Dict[str, str]  # logical template field -> concrete state field
    output_fields_mapping: Dict[str, str]  # logical template field -> concrete state field

    # Only run if these state fields have these values, e.g. {"export_dot": true}.
    input_conditions: Optional[Dict[str, Any]] = None

    output_field_for_next_step_mapping: Optional[str] = None
    next_step_mapping: Optional[Dict[str, str]] = None  # output_field_for_next_step_mapping value -> step_name

    @field_validator("step_name", "operation_template_name")
    @classmethod
    def non_empty(cls, v: str, info) -> str:
        if not v.strip():
            raise ValueError(f"{info.field_name} must not be empty")
        return v

    @field_validator("input_fields_mapping", "output_fields_mapping")
    @classmethod
    def fields_non_empty(cls, v: Dict[str, str], info) -> Dict[str, str]:
        if not v:
            raise ValueError(f"{info.field_name} must contain at least one item")
        if len(set(v.values())) != len(v):
            raise ValueError(f"{info.field_name} must not map two fields to the same state field")
        return v

    @model_validator(mode="after")
    def validate_next_step_mapping(self) -> "PipelineStep":
        if self.next_step_mapping:
            if self.output_field_for_next_step_mapping:
                if self.output_field_for_next_step_mapping not in self.output_fields_mapping.keys():
                    raise ValueError(
                        f"output_field_for_next_step_mapping='{self.output_field_for_next_step_mapping}' "
                        f"must be one of output_fields_mapping={self.output_fields_mapping}")
            elif ANY_VALUE not in self.next_step_mapping:
                raise ValueError("output_field_for_next_step_mapping is required when next_step_mapping "
                                 "has no __any__ value option")
        return self

# =======================================================================


class Pipeline(BaseModel):
    pipeline_name: str
    version: str
    steps: List[PipelineStep]

    @field_validator("pipeline_name", "version")
    @classmethod
    def non_empty(cls, v: str, info) -> str:
        if not v.strip():
            raise ValueError(f"{info.field_name} must not be empty")
        return v

    @field_validator("steps")
    @classmethod
    def non_empty_steps(cls, v: List[PipelineStep]) -> List[PipelineStep]:
        if not v:
            raise ValueError("Pipeline must contain at least one step")
        return v

    @model_validator(mode="after")
    def validate_steps(self) -> "Pipeline":
        step_names = [s.step_name for s in self.steps]
        if len(set(step_names)) != len(step_names):
            raise ValueError("step_name values within a pipeline must be unique")

        name_set = set(step_names) | {END_NODE}
        for step in self.steps:
            if step.next_step_mapping:
                for value, target in step.next_step_mapping.items():
                    if target not in name_set:
                        raise ValueError(
                            f"Step '{step.step_name}' has next_step_mapping[{value!r}] -> {target!r}, "
                            f"but no such step_name exists in pipeline"
                        )
        return self

# =======================================================================


def _geodesic_cap_from_env() -> int:
    raw = os.environ.get(MAX_GEODESICS_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_GEODESIC_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{MAX_GEODESICS_ENV} must be an integer; got {raw!r}")


class RunConfig(BaseModel):
    """One toolkit run: the input, the command and the window parameters."""
    input_path: Path
    command: str
    tree_radius: int = 2
    word_window: int = 3
    circuit_bound: int = 4
    stability_step: int = 2
    out: Path = Path("out")
    skip_hypotheses: bool = False
    export_dot: bool = False
    presentation: Optional[str] = None
    max_geodesics: int = Field(default_factory=_geodesic_cap_from_env)

    @field_validator("command")
    @classmethod
    def known_command(cls, v: str) -> str:
        if v not in COMMANDS:
            raise ValueError(f"Unknown command {v!r}; expected one of {list(COMMANDS)}")
        return v

    @field_validator("tree_radius")
    @classmethod
    def radius_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"tree radius R must be >= 0; got {v}")
        return v

    @field_validator("word_window")
    @classmethod
    def window_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"word window L must be >= 1; got {v}")
        return v

    @field_validator("circuit_bound")
    @classmethod
    def circuit_bound_at_least_three(cls, v: int) -> int:
        if v < 3:
            raise ValueError(f"circuit bound n must be >= 3; got {v}")
        return v

    @field_validator("stability_step")
    @classmethod
    def stability_step_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"stability step must be >= 1; got {v}")
        return v

    @field_validator("max_geodesics")
    @classmethod
    def cap_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"geodesic cap must be >= 1; got {v}")
        return v

    def windows(self) -> List[Tuple[int, int]]:
        """The compared windows, ending with (R, L) and shrinking by one in both parameters."""
        windows: List[Tuple[int, int]] = []
        for shrink in reversed(range(self.stability_step)):
            window = (max(self.tree_radius - shrink, 0), max(self.word_window - shrink, 1))
            if window not in windows:
                windows.append(window)
        return windows

    @property
    def report_path(self) -> Path:
        return self.out / f"{self.command}.report.txt"
