"""
Unit tests for peripheral.py
"""
import warnings

import pytest

from src.bass_serre import build_tree_window, tame_presentation
from src.graph_of_groups_loader import load_fixture, load_graph_of_groups
from src.group_kernel import parse_element
from src.peripheral import (
    PeripheralStructure,
    check_extension,
    compute_Q,
    compute_union_minus_repeats,
    declared_structure,
    intersection_classes,
    intersection_witnesses,
    normalize_representative,
    structures_agree,
    totality_probe,
    transfer_quasiconvexity,
    vertex_descriptor
)
from src.quasiconvex import verify_relative_quasiconvexity
from src.toolkit_errors import (HypothesisFailure, IsolationFailure, MaximalityFailure, MissingIntersectionWitness,
                                NotAnExtension, TruncationWarning)


@pytest.fixture
def amalgam(write_input, sample_graph_of_groups):
    return load_graph_of_groups(write_input(sample_graph_of_groups))


def _union(name, variant):
    g = load_fixture(name)
    return compute_union_minus_repeats(g, build_tree_window(g, 0, 2), variant)


class TestComputeQ:
    """Tests for compute_Q function"""

    def test_amalgam(self, amalgam):
        q = compute_Q(amalgam, build_tree_window(amalgam, 1, 1))

        assert q.variant == "Q"
        assert q.provenances()[0] == "vertex:v1/Pa"
        assert q.provenances()[1].startswith("component:")
        assert [m.generator_text() for m in q.members] == [["a"], ["b"]]
        assert q.note == "no repeat found up to length 1"

    def test_finite_stabilizers_are_omitted(self, free_product):
        assert compute_Q(free_product, build_tree_window(free_product, 1, 1)).members == ()

    def test_undeclared_ends(self):
        g = load_fixture("criterion_holds")

        with pytest.raises(HypothesisFailure, match="has no declared parabolic container"):
            compute_Q(g, build_tree_window(g, 0, 3))

    @pytest.mark.slow
    def test_hnn(self, example_hnn):
        with pytest.warns(TruncationWarning):
            q = compute_Q(example_hnn, build_tree_window(example_hnn, 1, 6))

        assert len(q.members) == 1
        assert q.members[0].generator_text() == ["ab", "t"]
        assert q.members[0].truncated

    @pytest.mark.slow
    def test_hnn_on_the_wider_window(self, example_window):
        g, t, _, _, _ = example_window(3, 6)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            q = compute_Q(g, t)

        assert [m.generator_text() for m in q.members] == [["ab", "t"]]


class TestUnionMinusRepeats:
    """Tests for compute_union_minus_repeats function"""

    def test_maximal_both_keeps_the_first_declared(self, amalgam):
        union = compute_union_minus_repeats(amalgam, build_tree_window(amalgam, 0, 1), "maximal-both")

        assert union.provenances() == ["vertex:v1/Pa", "vertex:v1/Pb"]
        assert union.removed[0].provenance == "vertex:v2/Pc"
        assert union.removed[0].retained == "vertex:v1/Pb"
        assert union.removed[0].chain == ("e",)

    def test_maximal_both_needs_maximal_ends(self):
        with pytest.raises(MaximalityFailure, match="not maximal parabolic at end 'to'"):
            _union("union_amalgam", "maximal-both")

    def test_auto_falls_back_to_maximal_initial(self):
        union = _union("union_amalgam", "auto")

        assert union.variant == "maximal-initial"
        assert union.provenances() == ["vertex:v1/Pa", "vertex:v2/Pc", "vertex:v2/Pd"]
        assert union.removed[0].provenance == "vertex:v1/Pb"
        assert union.removed[0].retained == "vertex:v2/Pc"

    def test_first_across_a_stable_letter(self):
        union = _union("union_hnn", "maximal-initial")

        assert union.provenances() == ["vertex:v/Pb"]
        assert union.removed[0].conjugator == (("t", -1),)

    def test_first_needs_isolated_ends(self):
        with pytest.raises(IsolationFailure, match="are not isolated"):
            _union("union_self_loop", "maximal-initial")

    def test_isolation_failure_is_not_swallowed_by_auto(self):
        with pytest.raises(IsolationFailure):
            _union("union_self_loop", "auto")

    def test_unknown_variant(self, amalgam):
        with pytest.raises(ValueError, match="Unknown variant"):
            compute_union_minus_repeats(amalgam, build_tree_window(amalgam, 0, 1), "second")


class TestStructures:
    """Tests for declared structures, comparison and representatives"""

    def test_declared_structure(self, amalgam):
        declared = declared_structure(amalgam)

        assert declared.variant == "declared"
        assert declared.provenances() == ["vertex:v1/Pa", "vertex:v1/Pb", "vertex:v2/Pc"]
        assert declared.member("vertex:v2/Pc").contains("b")

    def test_member_lookup(self, amalgam):
        with pytest.raises(KeyError):
            declared_structure(amalgam).member("vertex:v2/Pd")

    def test_q_agrees_with_the_union(self, amalgam):
        t = build_tree_window(amalgam, 1, 1)

        assert structures_agree(compute_Q(amalgam, t), compute_union_minus_repeats(amalgam, t), amalgam)
        assert not structures_agree(compute_Q(amalgam, t), declared_structure(amalgam), amalgam)

    def test_normalize_representative(self, amalgam):
        group = amalgam.vertex("v1").group
        descriptor = vertex_descriptor(amalgam, "v1", [parse_element(group, "a b a^-1")], "conjugate")
        normalized = normalize_representative(amalgam, descriptor, 1)

        assert normalized.generator_text() == ["b"]
        assert normalized.conjugator == (("a", -1),)


class TestCheckExtension:
    """Tests for check_extension function"""

    def test_identity_extension(self, amalgam):
        union = compute_union_minus_repeats(amalgam, build_tree_window(amalgam, 0, 1))
        verdict = check_extension(union, union, amalgam, [(0, 1)])

        assert verdict.holds
        assert verdict.malnormal_bounded
        assert [kappa for _, _, kappa in verdict.kappas] == [0, 0]
        assert verdict.text.startswith("condition (1) holds (bounded search)")

    def test_missing_member(self):
        base = declared_structure(load_fixture("union_amalgam"))
        smaller = PeripheralStructure(base.members[:1], "smaller")

        with pytest.raises(NotAnExtension, match="'vertex:v1/Pb'"):
            check_extension(base, smaller, load_fixture("union_amalgam"), [(0, 2)])


class TestTransfer:
    """Tests for intersection classes and transfer_quasiconvexity"""

    def _factor_setup(self, free_product):
        h = tame_presentation(free_product, "factor")
        hw = verify_relative_quasiconvexity(free_product, h, [(0, 1)]).witnesses[0]
        base = declared_structure(free_product)
        member = vertex_descriptor(free_product, "A", [parse_element(free_product.vertex("A").group, "a")],
                                   "vertex:A")
        return h, hw, base, PeripheralStructure((member,), "extension")

    def test_identity_extension_is_a_no_op(self, free_product):
        h, hw, base, _ = self._factor_setup(free_product)
        verdict = transfer_quasiconvexity(hw, base, base, {}, free_product, h)

        assert verdict.text == "identity extension: transfer is a no-op"

    def test_whole_vertex_group_member(self, free_product):
        h, hw, base, ext = self._factor_setup(free_product)

        assert intersection_classes(h, base, ext) == ([("vertex:A", "1")], [])
        witnesses = intersection_witnesses(free_product, h, ext, (0, 1))
        verdict = transfer_quasiconvexity(hw, base, ext, witnesses, free_product, h)

        assert verdict.forward and verdict.backward
        assert "backward: 1 classes witnessed, 0 parabolic" in verdict.text

    def test_missing_witness(self, free_product):
        h, hw, base, ext = self._factor_setup(free_product)

        with pytest.raises(MissingIntersectionWitness, match="'vertex:A' at coset '1'"):
            transfer_quasiconvexity(hw, base, ext, {}, free_product, h)


class TestTotalityProbe:
    """Tests for totality_probe function"""

    def test_reports_without_raising(self, amalgam):
        probe = totality_probe(amalgam, build_tree_window(amalgam, 1, 1))

        assert probe.edges_total
        assert probe.vertices_total == (not probe.anomalies)
        assert str(probe.params) == "R=1, L=1"

    def test_non_total_edge(self):
        g = load_fixture("criterion_nontotal")
        probe = totality_probe(g, build_tree_window(g, 0, 2), declared_structure(g))

        assert not probe.edges_total
