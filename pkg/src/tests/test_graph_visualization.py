"""
Unit tests for graph_visualization.py
"""
import pytest

from src.bass_serre import build_tree_window
from src.fine_graph import build_K_and_forest, quotient
from src.graph_visualization import export_dot, quotient_to_dot, to_dot
from src.group_kernel import GroupDesc, GroupKind, parse_element
from src.stallings import core_graph
from src.toolkit_errors import IoError

F2 = GroupDesc(kind=GroupKind.FREE, symbols=("a", "b"))


class TestToDot:
    """Tests for the DOT renderings"""

    def test_core_graph(self):
        text = to_dot(core_graph(F2, [parse_element(F2, "a")]))

        assert text == ('digraph "core" {\n'
                        '\t"0" [label="0", shape="doublecircle"];\n'
                        '\t"0" -> "0" [label="a"];\n'
                        '}\n')

    def test_tree_window(self, free_product):
        text = to_dot(build_tree_window(free_product, 1, 1))

        assert text.startswith('graph "tree" {\n\tlabel="R=1, L=1";\n')
        assert '\t"3" [label="a^-1·B"];' in text
        assert '\t"0" -- "1" [label="e"];' in text

    def test_fine_graph_is_deterministic(self, free_product):
        def render():
            t = build_tree_window(free_product, 1, 1)
            k, f = build_K_and_forest(free_product, t, 1)
            return to_dot(k) + to_dot(f) + to_dot(quotient(k, f))

        assert render() == render()

    def test_highlight(self, free_product):
        t = build_tree_window(free_product, 0, 1)
        kbar = quotient(*build_K_and_forest(free_product, t, 1))
        first = sorted(kbar.graph.nodes)[0]
        text = quotient_to_dot(kbar, highlight=[first])

        assert text.count('fillcolor="lightblue"') == 1
        assert 'color="blue"' not in text

    def test_unknown_artifact(self):
        with pytest.raises(TypeError, match="Cannot render str as DOT"):
            to_dot("graph")


class TestExportDot:
    """Tests for export_dot function"""

    def test_creates_parent_directories(self, temp_dir, free_product):
        path = temp_dir / "nested" / "tree.dot"
        written = export_dot(build_tree_window(free_product, 0, 1), path)

        assert written == str(path.absolute())
        assert path.read_text(encoding="utf-8").startswith('graph "tree"')

    def test_unwritable_path(self, temp_dir, free_product):
        blocker = temp_dir / "blocker"
        blocker.write_text("", encoding="utf-8")

        with pytest.raises(IoError, match="Cannot write DOT file"):
            export_dot(build_tree_window(free_product, 0, 1), blocker / "tree.dot")
