"""
Unit tests for stallings.py
"""
import pytest
from hypothesis import given, strategies as st

from src.group_kernel import GroupDesc, GroupKind, invert, multiply_all, parse_element, power, reduce
from src.stallings import (
    conjugate,
    conjugate_into,
    core_graph,
    coset_representative,
    intersection,
    is_malnormal_collection,
    is_total,
    membership,
    pullback,
    subgroup_basis,
    transducer,
    transport
)
from src.toolkit_errors import NotFreeGroup

F2 = GroupDesc(kind=GroupKind.FREE, symbols=("a", "b"))
Z4 = GroupDesc(kind=GroupKind.ABELIAN, symbols=("t",), torsion=(4,))

words = st.lists(st.tuples(st.sampled_from(["a", "b"]), st.sampled_from([1, -1])), max_size=10)


def _core(*generators):
    return core_graph(F2, [parse_element(F2, g) for g in generators])


def _transducer():
    t = parse_element(Z4, "t")
    return transducer(F2, [(parse_element(F2, "a"), t), (parse_element(F2, "ab"), power(t, 3))], Z4)


class TestCoreGraph:
    """Tests for folding and canonical numbering"""

    def test_cyclic_subgroup(self):
        core = _core("a^2")

        assert core.vertex_count == 2
        assert core.edges == ((0, "a", 1), (1, "a", 0))
        assert core.rank == 1

    def test_numbering_does_not_depend_on_generators(self):
        assert _core("ab", "ba").same_subgroup(_core("ba", "ab"))
        assert _core("a", "b") == _core("ab", "b")

    def test_trivial_subgroup(self):
        core = _core()

        assert core.is_trivial()
        assert core.vertex_count == 1

    def test_hanging_trees_are_trimmed(self):
        core = _core("b a b^-1")

        assert core.vertex_count == 2
        assert core.edges == ((0, "b", 1), (1, "a", 1))

    def test_needs_free_group(self):
        with pytest.raises(NotFreeGroup):
            core_graph(Z4, [])

    def test_basis_reads_back_the_subgroup(self):
        core = _core("a^2", "ab")

        assert core_graph(F2, [reduce(F2, w) for w in subgroup_basis(core)]).same_subgroup(core)


class TestMembership:
    """Tests for membership and cosets"""

    def test_membership(self):
        core = _core("a^2", "b")

        assert membership(core, parse_element(F2, "a^2 b a^-2"))
        assert not membership(core, parse_element(F2, "a"))

    @given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from([1, -1])), max_size=6))
    def test_products_of_generators_are_members(self, choices):
        generators = [parse_element(F2, "a^2"), parse_element(F2, "ab")]
        product = multiply_all(F2, [power(generators[i], sign) for i, sign in choices])

        assert membership(_core("a^2", "ab"), product)

    def test_coset_representatives(self):
        core = _core("a")

        assert str(coset_representative(core, parse_element(F2, "b a^3"))) == "b"
        assert str(coset_representative(core, parse_element(F2, "a b"))) == "ab"


class TestPullback:
    """Tests for pullbacks and the properties computed from them"""

    def test_intersection_of_cyclic_subgroups(self):
        assert intersection(_core("a^2"), _core("a^3")).same_subgroup(_core("a^6"))

    def test_disjoint_subgroups_have_no_components(self):
        assert pullback(_core("a"), _core("b")) == []

    def test_malnormal_pair(self):
        assert is_malnormal_collection([_core("a"), _core("b")]).holds

    def test_proper_power_is_not_malnormal(self):
        verdict = is_malnormal_collection([_core("a^2")])

        assert not verdict.holds
        assert str(verdict.witness) == "a"
        assert (verdict.first, verdict.second) == (0, 0)

    def test_conjugate_members_are_not_malnormal(self):
        verdict = is_malnormal_collection([_core("a"), _core("b a b^-1")])

        assert not verdict.holds
        assert str(verdict.witness) == "b^-1"

    def test_totality(self):
        assert not is_total(_core("a^2"), [_core("a")]).holds
        assert is_total(_core("a"), [_core("a")]).holds
        assert is_total(_core("b"), [_core("a")]).holds

    def test_conjugate_into(self):
        assert str(conjugate_into(_core("b a b^-1"), _core("a"))) == "b"
        assert conjugate_into(_core("b"), _core("a")) is None

    def test_conjugate(self):
        assert conjugate(_core("a"), parse_element(F2, "b")).same_subgroup(_core("b a b^-1"))


class TestTransducer:
    """Tests for edge outputs carried through folding"""

    def test_folding_keeps_the_outputs(self):
        core = _transducer()

        assert core.vertex_count == 1
        assert transport(core, parse_element(F2, "b")) == parse_element(Z4, "t^2")

    @given(words)
    def test_transport_is_the_induced_map(self, word):
        core = _transducer()
        exponent = sum(sign * (1 if symbol == "a" else 2) for symbol, sign in word)

        assert transport(core, reduce(F2, word)) == power(parse_element(Z4, "t"), exponent)

    def test_non_loops_have_no_transport(self):
        core = transducer(F2, [(parse_element(F2, "a^2"), parse_element(Z4, "t"))], Z4)

        assert transport(core, parse_element(F2, "a")) is None
        assert transport(core, invert(parse_element(F2, "a^2"))) == parse_element(Z4, "t^-1")

    def test_plain_core_has_no_transport(self):
        with pytest.raises(ValueError, match="transport needs a core graph built by transducer"):
            transport(_core("a"), parse_element(F2, "a"))
