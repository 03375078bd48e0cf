"""
Unit and integration tests for toolkit_runner.py
"""
from pathlib import Path
import pytest

from src.graph_of_groups_loader import DEFAULT_FIXTURES_DIR
from src.pipeline_types import RunConfig
from src.toolkit_errors import HypothesisFailure, IsolationFailure
from src.toolkit_runner import EXIT_HYPOTHESIS_FAILURE, EXIT_INPUT_ERROR, EXIT_OK, ToolkitRunner, main, run


def _fixture(name: str) -> Path:
    return DEFAULT_FIXTURES_DIR / f"{name}.json"


def _config(temp_dir: Path, command: str, name: str, **kwargs) -> RunConfig:
    return RunConfig(input_path=_fixture(name), command=command, out=temp_dir, **kwargs)


class TestToolkitRunner:
    """Tests for ToolkitRunner class"""

    def test_init_loads_pipelines(self, mocker):
        """Test that initialization compiles the command pipelines"""
        mock_build_graph = mocker.patch("src.toolkit_runner.build_run_graph")
        mock_build_graph.return_value = {"validate": mocker.Mock()}

        runner = ToolkitRunner()

        assert list(runner.pipeline_graphs) == ["validate"]
        mock_build_graph.assert_called_once()

    def test_run_invokes_the_command_pipeline(self, temp_dir, mocker):
        """Test that the pipeline gets the initial state and its outputs become the result"""
        mock_graph = mocker.Mock()
        mock_graph.invoke.return_value = {"exit_status": 0, "report_path": str(temp_dir / "r.txt")}
        config = _config(temp_dir, "validate", "example_hnn")

        status, path = ToolkitRunner({"validate": mock_graph}).run(config)

        assert status == EXIT_OK
        assert path == temp_dir / "r.txt"
        state = mock_graph.invoke.call_args[0][0]
        assert state["config"] is config
        assert state["report_blocks"] == []
        assert state["export_dot"] is False

    def test_run_unknown_pipeline(self, temp_dir):
        """Test running a command with no compiled pipeline"""
        with pytest.raises(ValueError, match="Pipeline 'validate' not found"):
            ToolkitRunner({}).run(_config(temp_dir, "validate", "example_hnn"))

    @pytest.mark.parametrize("error, expected", [
        (HypothesisFailure("e", "no container"), EXIT_HYPOTHESIS_FAILURE),
        (IsolationFailure(("e:from", "e:to"), "1"), EXIT_HYPOTHESIS_FAILURE),
        (ValueError("bad window"), EXIT_INPUT_ERROR),
        (FileNotFoundError("missing.json"), EXIT_INPUT_ERROR),
    ])
    def test_errors_leave_a_report(self, temp_dir, mocker, error, expected):
        """Test that failing pipelines map to exit codes and still write a report"""
        mock_graph = mocker.Mock()
        mock_graph.invoke.side_effect = error

        status, path = ToolkitRunner({"validate": mock_graph}).run(_config(temp_dir, "validate", "example_hnn"))
        report = path.read_text(encoding="utf-8")

        assert status == expected
        assert f"error: {type(error).__name__}" in report
        assert "status: failed" in report

    def test_unexpected_errors_propagate(self, temp_dir, mocker):
        """Test that programming errors are not turned into reports"""
        mock_graph = mocker.Mock()
        mock_graph.invoke.side_effect = KeyError("graph")

        with pytest.raises(KeyError):
            ToolkitRunner({"validate": mock_graph}).run(_config(temp_dir, "validate", "example_hnn"))


@pytest.mark.integration
class TestCommands:
    """End-to-end runs of the command pipelines on the bundled fixtures"""

    def test_validate(self, temp_dir):
        status, path = run(_config(temp_dir, "validate", "example_hnn"))
        report = path.read_text(encoding="utf-8")

        assert status == EXIT_OK
        assert path == temp_dir / "validate.report.txt"
        assert "summary: parabolic: yes; maximal: no; container malnormal: yes" in report
        assert "window: exact" in report

    def test_validate_is_byte_identical_across_runs(self, temp_dir):
        first = run(_config(temp_dir / "first", "validate", "example_hnn"))[1].read_bytes()
        second = run(_config(temp_dir / "second", "validate", "example_hnn"))[1].read_bytes()

        assert first == second

    @pytest.mark.parametrize("arguments", [
        ["tree", "free_product", "--tree-radius", "1", "--word-window", "1"],
        ["fine", "free_product", "--tree-radius", "1", "--word-window", "1"],
        ["quotient", "free_product", "--tree-radius", "1", "--word-window", "1"],
        ["peripherals", "union_amalgam", "--tree-radius", "0", "--word-window", "2"],
        ["parabolic-trees", "union_amalgam", "--tree-radius", "0", "--word-window", "2"],
        ["hypotheses", "criterion_holds"],
        ["qc", "free_product", "--tree-radius", "1", "--word-window", "2", "--presentation", "factor"],
    ] + [["validate", path.stem] for path in sorted(DEFAULT_FIXTURES_DIR.glob("*.json"))])
    def test_every_output_is_byte_identical_across_runs(self, temp_dir, arguments):
        command, name, *options = arguments
        outputs = []
        for out in (temp_dir / "first", temp_dir / "second"):
            status = main([command, str(_fixture(name)), "--out", str(out), "--dot"] + options)
            files = sorted(p for p in out.iterdir() if p.is_file())
            outputs.append((status, [(p.name, p.read_bytes()) for p in files]))

        assert outputs[0][1]
        assert outputs[0] == outputs[1]

    def test_invalid_input(self, temp_dir):
        status, path = run(_config(temp_dir, "validate", "invalid_not_mono"))

        assert status == EXIT_INPUT_ERROR
        assert "error: InjectionNotMono" in path.read_text(encoding="utf-8")

    def test_missing_input(self, temp_dir):
        config = RunConfig(input_path=temp_dir / "missing.json", command="validate", out=temp_dir)

        assert run(config)[0] == EXIT_INPUT_ERROR

    def test_non_malnormal_peripherals(self, temp_dir, write_input, sample_graph_of_groups):
        sample_graph_of_groups["vertices"]["v1"]["peripherals"][0]["generators"] = ["a^2"]
        path = write_input(sample_graph_of_groups)

        failed = run(RunConfig(input_path=path, command="validate", out=temp_dir / "checked"))
        skipped = run(RunConfig(input_path=path, command="validate", out=temp_dir / "skipped",
                                skip_hypotheses=True))

        assert failed[0] == EXIT_HYPOTHESIS_FAILURE
        assert "peripheral families not almost malnormal at v1" in failed[1].read_text(encoding="utf-8")
        assert skipped[0] == EXIT_OK

    def test_hypotheses_fail(self, temp_dir):
        status, path = run(_config(temp_dir, "hypotheses", "criterion_nonmalnormal"))
        report = path.read_text(encoding="utf-8")

        assert status == EXIT_HYPOTHESIS_FAILURE
        assert "route: criterion" in report
        assert "failure: hypothesis (c) almost malnormal fails at vertex 'v' with witness g=a" in report

    def test_hypotheses_hold(self, temp_dir):
        status, path = run(_config(temp_dir, "hypotheses", "criterion_holds"))

        assert status == EXIT_OK
        assert "status: ok" in path.read_text(encoding="utf-8")

    def test_tree(self, temp_dir):
        status, path = run(_config(temp_dir, "tree", "free_product", tree_radius=1, word_window=1))

        assert status == EXIT_OK
        assert "cosets: 1·A, 1·B, a·B, a^-1·B" in path.read_text(encoding="utf-8")

    def test_window_too_small(self, temp_dir):
        status, path = run(_config(temp_dir, "tree", "example_hnn", tree_radius=1, word_window=3))

        assert status == EXIT_INPUT_ERROR
        assert "error: WindowTooSmall" in path.read_text(encoding="utf-8")

    def test_qc(self, temp_dir):
        status, path = run(_config(temp_dir, "qc", "free_product", tree_radius=1, word_window=2,
                                   presentation="factor"))
        report = path.read_text(encoding="utf-8")

        assert status == EXIT_OK
        assert "verdict: hypotheses hold; witness stable at κ=0" in report
        assert "windows: R=0, L=1; R=1, L=2" in report

    @pytest.mark.slow
    def test_peripherals_of_hnn(self, temp_dir):
        status, path = run(_config(temp_dir, "peripherals", "example_hnn", tree_radius=1, word_window=6))

        assert status == EXIT_OK
        assert "result: ℚ = {⟨ab, t⟩}" in path.read_text(encoding="utf-8")


@pytest.mark.integration
class TestMain:
    """Tests for the command-line entry point"""

    def test_dot_export(self, temp_dir, capsys):
        status = main(["validate", str(_fixture("example_hnn")), "--out", str(temp_dir), "--dot"])

        assert status == EXIT_OK
        assert capsys.readouterr().out.strip() == str(temp_dir / "validate.report.txt")
        assert (temp_dir / "validate.core.v.W.dot").exists()
        assert (temp_dir / "validate.core.e.from.dot").exists()
        assert "file: validate.core.e.to.dot" in (temp_dir / "validate.report.txt").read_text(encoding="utf-8")

    def test_invalid_window(self, temp_dir):
        assert main(["tree", str(_fixture("free_product")), "--out", str(temp_dir), "--word-window", "0"]) \
            == EXIT_INPUT_ERROR

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["frobnicate", "input.json"])
