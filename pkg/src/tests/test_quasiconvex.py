"""
Unit tests for quasiconvex.py
"""
import itertools

import networkx as nx
import pytest

from src.bass_serre import tame_presentation
from src.graph_of_groups_loader import load_fixture, load_graph_of_groups
from src.quasiconvex import (
    build_L,
    check_qc_hypotheses,
    extend_with_edge_groups,
    measure_kappa,
    verify_relative_quasiconvexity
)
from src.toolkit_errors import EmptySubgraph


class TestCheckQcHypotheses:
    """Tests for check_qc_hypotheses function"""

    def test_parabolic_route(self, example_hnn):
        report = check_qc_hypotheses(example_hnn)

        assert report.route == "parabolic"
        assert report.holds
        assert [c.name for c in report.checks if c.edge is None] == ["peripherals almost malnormal", "quasiconvex"]

    def test_totality_is_informational_on_the_parabolic_route(self, example_hnn):
        report = check_qc_hypotheses(example_hnn)

        assert [(c.edge, c.end, c.holds) for c in report.info] == [("e", "from", False), ("e", "to", False)]

    def test_criterion_route_holds(self, fixtures_dir):
        report = check_qc_hypotheses(load_fixture("criterion_holds", fixtures_dir))

        assert report.route == "criterion"
        assert report.holds
        assert report.first_failure is None

    def test_criterion_not_malnormal(self, fixtures_dir):
        failure = check_qc_hypotheses(load_fixture("criterion_nonmalnormal", fixtures_dir)).first_failure

        assert failure.name == "(c) almost malnormal"
        assert failure.vertex == "v"
        assert failure.witness == "a"
        assert failure.describe().startswith("hypothesis (c) almost malnormal fails at vertex 'v' with witness g=a")

    def test_criterion_not_total(self, fixtures_dir):
        failure = check_qc_hypotheses(load_fixture("criterion_nontotal", fixtures_dir)).first_failure

        assert failure.name == "(a) total"
        assert (failure.edge, failure.end) == ("e", "from")
        assert "meets Pa in an infinite proper subgroup" in failure.describe()


class TestExtendWithEdgeGroups:
    """Tests for extend_with_edge_groups function"""

    def test_undeclared_ends_get_containers(self, fixtures_dir):
        extended = extend_with_edge_groups(load_fixture("criterion_holds", fixtures_dir))

        assert extended.undeclared_ends() == []
        assert [p.id for p in extended.vertex("v").declared_peripherals] == ["Pa", "edge:e:from"]
        assert [p.id for p in extended.vertex("w").declared_peripherals] == ["edge:e:to"]

    def test_contained_peripheral_is_absorbed(self, write_input):
        data = {
            "vertices": {
                "v": {"group": {"kind": "free", "symbols": ["a", "b"]},
                      "peripherals": [{"id": "Pa", "generators": ["a"]}]},
                "w": {"group": {"kind": "free", "symbols": ["c"]}}
            },
            "edges": {
                "e": {"group": {"kind": "free", "symbols": ["z"]}, "from": "v", "to": "w",
                      "from_map": {"z": "a"}, "to_map": {"z": "c"}}
            },
            "spanning_tree": ["e"]
        }
        extended = extend_with_edge_groups(load_graph_of_groups(write_input(data)))

        assert [p.id for p in extended.vertex("v").declared_peripherals] == ["edge:e:from"]

    def test_declared_graph_is_unchanged(self, example_hnn):
        assert extend_with_edge_groups(example_hnn) is example_hnn


class TestMeasureKappa:
    """Tests for measure_kappa function"""

    def test_path_between_endpoints(self):
        measurement = measure_kappa(nx.path_graph(5), [0, 4])

        assert measurement.kappa == 2
        assert measurement.max_geodesics == 1
        assert not measurement.capped

    def test_square_has_two_geodesics(self):
        measurement = measure_kappa(nx.cycle_graph(4), [0, 2])

        assert measurement.kappa == 1
        assert measurement.max_geodesics == 2

    def test_whole_graph_is_convex(self):
        measurement = measure_kappa(nx.cycle_graph(5), range(5))

        assert measurement.kappa == 0
        assert measurement.distortion == 1.0

    def test_distortion(self):
        measurement = measure_kappa(nx.cycle_graph(6), [0, 1, 2, 3, 4])

        assert measurement.distortion == 2.0

    def test_geodesic_cap(self):
        assert measure_kappa(nx.cycle_graph(4), [0, 2], cap=2).capped

    def test_empty_selection(self):
        with pytest.raises(EmptySubgraph, match="L̄ is empty"):
            measure_kappa(nx.path_graph(3), [])

    def test_selection_outside_the_graph(self):
        with pytest.raises(EmptySubgraph, match="are not in K̄"):
            measure_kappa(nx.path_graph(3), [0, 7])

    def test_geodesics_through_several_blocks(self):
        graph = nx.Graph([(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 5)])
        measurement = measure_kappa(graph, [0, 8])

        assert measurement.kappa == 2
        assert measurement.max_geodesics == 2

    def test_hanging_blocks_are_not_searched(self):
        graph = nx.path_graph(4)
        graph.add_edges_from([(1, 10), (10, 11), (11, 1)])

        assert measure_kappa(graph, [0, 3]).kappa == 1


def _brute_force_kappa(graph, lbar):
    d = dict(nx.all_pairs_shortest_path_length(graph))
    inner = dict(nx.all_pairs_shortest_path_length(graph.subgraph(lbar)))
    to_lbar = {z: min(d[z][y] for y in lbar) for z in graph}
    kappa, distortion = 0, 1.0
    for x, y in itertools.combinations(lbar, 2):
        on = [z for z in graph if d[x][z] + d[z][y] == d[x][y]]
        kappa = max(kappa, max(to_lbar[z] for z in on))
        if y in inner[x]:
            distortion = max(distortion, inner[x][y] / d[x][y])
    return kappa, round(distortion, 6)


KAPPA_GRAPHS = [
    nx.petersen_graph(),
    nx.convert_node_labels_to_integers(nx.grid_2d_graph(4, 4)),
    nx.barbell_graph(4, 3),
    nx.lollipop_graph(5, 4),
    nx.connected_watts_strogatz_graph(14, 4, 0.4, seed=3),
]


@pytest.mark.parametrize("graph", KAPPA_GRAPHS)
@pytest.mark.parametrize("size", [2, 3, 5])
def test_kappa_matches_all_pairs_scan(graph, size):
    nodes = sorted(graph.nodes)
    lbar = nodes[:size - 1] + [nodes[-1]]
    measurement = measure_kappa(graph, lbar)

    assert (measurement.kappa, measurement.distortion) == _brute_force_kappa(graph, lbar)


class TestVerifyRelativeQuasiconvexity:
    """Tests for verify_relative_quasiconvexity function"""

    def test_free_factor_is_stable(self, free_product):
        h = tame_presentation(free_product, "factor")
        verdict = verify_relative_quasiconvexity(free_product, h, [(0, 1), (1, 2)])

        assert verdict.holds
        assert verdict.stable
        assert [w.kappa.kappa for w in verdict.witnesses] == [0, 0]
        assert verdict.text == "hypotheses hold; witness stable at κ=0"

    def test_windows_are_measured_in_order(self, free_product):
        h = tame_presentation(free_product, "factor")
        verdict = verify_relative_quasiconvexity(free_product, h, [(1, 2), (0, 1)])

        assert [str(w.params) for w in verdict.witnesses] == ["R=0, L=1", "R=1, L=2"]

    def test_skipped_hypotheses_make_no_claim(self, free_product):
        h = tame_presentation(free_product, "factor")
        verdict = verify_relative_quasiconvexity(free_product, h, [(0, 1), (1, 2)], skip_hypotheses=True)

        assert not verdict.holds
        assert verdict.hypotheses is None
        assert verdict.text.startswith("hypotheses skipped (no soundness claim)")

    def test_single_window_is_never_stable(self, free_product):
        h = tame_presentation(free_product, "factor")
        verdict = verify_relative_quasiconvexity(free_product, h, [(1, 2)], stability_step=1)

        assert not verdict.holds
        assert not verdict.stable
        assert "witness not yet stable" in verdict.text

    def test_failed_hypothesis_stops_early(self, fixtures_dir):
        g = load_fixture("criterion_nonmalnormal", fixtures_dir)
        verdict = verify_relative_quasiconvexity(g, tame_presentation(g, "axis"), [(0, 2), (1, 3)])

        assert not verdict.holds
        assert verdict.witnesses == ()
        assert verdict.text.startswith("hypothesis (c) almost malnormal fails")


class TestHnnWitnesses:
    """κ of the HNN example's tame presentations on the acceptance windows"""

    @pytest.mark.slow
    @pytest.mark.parametrize("presentation", ["peripheral", "parabolic", "vertex"])
    def test_peripheral_and_vertex_groups_have_kappa_zero(self, example_window, presentation):
        g, t, k, f, kbar = example_window(3, 6)
        witness = build_L(tame_presentation(g, presentation), k, f, t, g, kbar)

        assert measure_kappa(kbar, witness.vertices).kappa == 0

    @pytest.mark.slow
    def test_axis_witness_is_connected_and_stable(self, example_window):
        kappas = []
        for window in [(3, 6), (3, 7)]:
            g, t, k, f, kbar = example_window(*window)
            witness = build_L(tame_presentation(g, "axis"), k, f, t, g, kbar)

            assert nx.is_connected(kbar.graph.subgraph(witness.vertices))
            kappas.append(measure_kappa(kbar, witness.vertices).kappa)

        assert kappas[0] == kappas[1]
