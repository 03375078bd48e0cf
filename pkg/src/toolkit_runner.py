import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from pydantic import ValidationError

from src.pipeline_run_graph_builder import build_run_graph
from src.pipeline_types import COMMANDS, LOG_LEVEL_ENV, REPORT_BLOCKS_FIELD, STATUS_FAILED, RunConfig
from src.toolkit_errors import HypothesisFailure, IsolationFailure, MaximalityFailure, ToolkitError
from src.toolkit_operations import write_report_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_HYPOTHESIS_FAILURE = 1
EXIT_INPUT_ERROR = 2

HYPOTHESIS_ERRORS = (HypothesisFailure, MaximalityFailure, IsolationFailure)
INPUT_ERRORS = (ToolkitError, ValidationError, ValueError, FileNotFoundError)


class ToolkitRunner(object):

    def __init__(self, pipeline_graphs: Optional[Dict[str, Any]] = None):
        self.pipeline_graphs = pipeline_graphs if pipeline_graphs is not None else build_run_graph()

    def initial_state(self, config: RunConfig) -> Dict[str, Any]:
        return {"config": config, "input_path": str(config.input_path), "export_dot": config.export_dot,
                REPORT_BLOCKS_FIELD: []}

    def run(self, config: RunConfig) -> Tuple[int, Path]:
        """Run the command's pipeline; failures still leave a report naming the error."""
        if config.command not in self.pipeline_graphs:
            raise ValueError(f"Pipeline {config.command!r} not found. Available pipelines: {sorted(self.pipeline_graphs)}")
        graph = self.pipeline_graphs[config.command]
        try:
            output = graph.invoke(self.initial_state(config))
        except HYPOTHESIS_ERRORS as ex:
            logger.error(f"Hypothesis failure in {config.command!r}: {type(ex).__name__}: {ex}")
            return EXIT_HYPOTHESIS_FAILURE, self._error_report(config, ex)
        except INPUT_ERRORS as ex:
            logger.error(f"Input error in {config.command!r}: {type(ex).__name__}: {ex}")
            return EXIT_INPUT_ERROR, self._error_report(config, ex)
        return output["exit_status"], Path(output["report_path"])

    @staticmethod
    def _error_report(config: RunConfig, ex: Exception) -> Path:
        message = " ".join(str(ex).split())
        return write_report_file(config, [[("error", type(ex).__name__), ("message", message),
                                           ("status", STATUS_FAILED)]])


def run(config: RunConfig) -> Tuple[int, Path]:
    return ToolkitRunner().run(config)

# =======================================================================


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsk", description="Graph-of-groups relative hyperbolicity toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", type=Path, help="graph-of-groups JSON file")
    parser.add_argument("--tree-radius", type=int, default=2, help="tree radius R")
    parser.add_argument("--word-window", type=int, default=3, help="word window L")
    parser.add_argument("--circuit-bound", type=int, default=4, help="circuit bound n")
    parser.add_argument("--stability-step", type=int, default=2, help="number of windows compared for stability")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--skip-hypotheses", action="store_true")
    parser.add_argument("--dot", action="store_true", help="export DOT files")
    parser.add_argument("--presentation", default=None, help="tame presentation id for qc")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        command=args.command,
        tree_radius=args.tree_radius,
        word_window=args.word_window,
        circuit_bound=args.circuit_bound,
        stability_step=args.stability_step,
        out=args.out,
        skip_hypotheses=args.skip_hypotheses,
        export_dot=args.dot,
        presentation=args.presentation,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_LEVEL_ENV, "INFO").upper(),
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                        stream=sys.stderr)
    args = build_arg_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as ex:
        logger.error(f"Invalid configuration: {ex}")
        return EXIT_INPUT_ERROR
    status, report = run(config)
    print(report)
    return status


if __name__ == "__main__":
    sys.exit(main())
