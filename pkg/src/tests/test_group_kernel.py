"""
Unit tests for group_kernel.py
"""
import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError

from src.group_kernel import (
    GroupDesc,
    GroupKind,
    Homomorphism,
    abelian_membership,
    all_elements,
    enumerate_elements,
    format_word,
    integer_echelon,
    invert,
    lattice_intersection,
    multiply,
    parse_element,
    parse_word,
    power,
    reduce,
    shortlex_key,
    vector_element
)
from src.toolkit_errors import GroupMismatch, ParseError, UnknownSymbol

F2 = GroupDesc(kind=GroupKind.FREE, symbols=("a", "b"))
Z3 = GroupDesc(kind=GroupKind.FINITE, symbols=("e", "r", "s"),
               table=tuple(tuple((i + j) % 3 for j in range(3)) for i in range(3)))
Z4 = GroupDesc(kind=GroupKind.ABELIAN, symbols=("t",), torsion=(4,))

words = st.lists(st.tuples(st.sampled_from(["a", "b"]), st.sampled_from([1, -1])), max_size=8)


class TestParseWord:
    """Tests for parse_word function"""

    def test_letters_and_powers(self):
        assert parse_word("a b^-1", ["a", "b"]) == (("a", 1), ("b", -1))
        assert parse_word("(ab)^2", ["a", "b"]) == (("a", 1), ("b", 1)) * 2
        assert parse_word("a⁻¹", ["a"]) == (("a", -1),)

    def test_identity_words(self):
        assert parse_word("", ["a"]) == ()
        assert parse_word("1", ["a"]) == ()

    def test_longest_symbol_first(self):
        assert parse_word("x1x", ["x", "x1"]) == (("x1", 1), ("x", 1))

    def test_unknown_symbol_column(self):
        with pytest.raises(UnknownSymbol, match="Unknown symbol 'c' at column 3") as info:
            parse_word("abc", ["a", "b"])

        assert info.value.column == 3

    def test_missing_close_paren(self):
        with pytest.raises(ParseError, match=r"Missing '\)'"):
            parse_word("(a", ["a"])

    def test_unbalanced_close_paren(self):
        with pytest.raises(ParseError, match="column 2"):
            parse_word("a)", ["a"])

    def test_exponent_needs_digits(self):
        with pytest.raises(ParseError, match="Expected an integer exponent"):
            parse_word("a^", ["a"])


class TestFormatWord:
    """Tests for format_word function"""

    def test_runs_become_powers(self):
        assert format_word((("a", 1), ("a", 1), ("b", -1))) == "a^2b^-1"

    def test_long_symbols_are_separated(self):
        assert format_word((("x1", 1), ("y", 1))) == "x1 y"

    def test_empty_word(self):
        assert format_word(()) == "1"


class TestGroupDesc:
    """Tests for GroupDesc validation"""

    def test_duplicate_symbols(self):
        with pytest.raises(ValidationError, match="must not contain duplicates"):
            GroupDesc(kind=GroupKind.FREE, symbols=("a", "a"))

    def test_torsion_order(self):
        with pytest.raises(ValidationError, match="torsion orders must be >= 2"):
            GroupDesc(kind=GroupKind.ABELIAN, symbols=("t",), torsion=(1,))

    def test_table_without_identity(self):
        with pytest.raises(ValidationError, match="has no identity element"):
            GroupDesc(kind=GroupKind.FINITE, symbols=("x", "y"), table=((0, 0), (0, 0)))

    def test_free_group_rejects_torsion(self):
        with pytest.raises(ValidationError, match="free groups take neither torsion nor table"):
            GroupDesc(kind=GroupKind.FREE, symbols=("a",), torsion=(2,))

    def test_rank(self):
        assert F2.rank == 2
        assert Z4.rank == 0 and Z4.is_finite
        assert GroupDesc(kind=GroupKind.ABELIAN, symbols=("x", "y", "t"), torsion=(4,)).rank == 2


class TestCanonicalArithmetic:
    """Tests for canonical elements and their words"""

    def test_free_reduction(self):
        x = parse_element(F2, "ab")

        assert multiply(x, invert(x)).is_identity()
        assert str(parse_element(F2, "a b b^-1 a")) == "a^2"

    def test_torsion_words_use_the_shorter_sign(self):
        group = GroupDesc(kind=GroupKind.ABELIAN, symbols=("x", "y", "t"), torsion=(4,))

        assert str(parse_element(group, "t^3")) == "t^-1"
        assert str(parse_element(group, "t^2")) == "t^2"
        assert str(parse_element(group, "y x")) == "xy"

    def test_finite_words_are_shortlex_least(self):
        s = parse_element(Z3, "s")

        assert str(s) == "r^-1"
        assert power(parse_element(Z3, "r"), 4) == parse_element(Z3, "r")
        assert power(parse_element(Z3, "r"), -1) == s

    def test_elements_of_different_groups(self):
        other = GroupDesc(kind=GroupKind.FREE, symbols=("a", "b", "c"))

        assert parse_element(F2, "a") != parse_element(other, "a")
        with pytest.raises(GroupMismatch):
            multiply(parse_element(F2, "a"), parse_element(other, "a"))

    def test_unknown_symbol_in_reduce(self):
        with pytest.raises(UnknownSymbol):
            reduce(F2, (("c", 1),))

    @given(words, words, words)
    def test_free_multiplication_is_associative(self, u, v, w):
        x, y, z = reduce(F2, u), reduce(F2, v), reduce(F2, w)

        assert multiply(multiply(x, y), z) == multiply(x, multiply(y, z))

    @given(words)
    def test_inverse_cancels(self, u):
        x = reduce(F2, u)

        assert multiply(invert(x), x).is_identity()


class TestEnumeration:
    """Tests for ShortLex enumeration"""

    def test_ball_sizes_in_free_group(self):
        assert len(list(enumerate_elements(F2, 1))) == 5
        assert len(list(enumerate_elements(F2, 2))) == 17

    def test_order_is_shortlex(self):
        keys = [shortlex_key(x) for x in enumerate_elements(F2, 2)]

        assert keys == sorted(keys)

    def test_all_elements_of_finite_groups(self):
        z2_z3 = GroupDesc(kind=GroupKind.ABELIAN, symbols=("u", "v"), torsion=(2, 3))

        assert len(all_elements(Z3)) == 3
        assert len(all_elements(z2_z3)) == 6

    def test_all_elements_of_infinite_group(self):
        with pytest.raises(GroupMismatch, match="is infinite"):
            all_elements(F2)


class TestIntegerLattices:
    """Tests for echelon forms, membership and intersections"""

    def test_echelon_uses_the_gcd(self):
        echelon = integer_echelon([[2, 4], [3, 6]], 2)

        assert echelon.rows == ((1, 2),)
        assert echelon.contains((3, 6))
        assert not echelon.contains((1, 3))

    def test_membership(self):
        z2 = GroupDesc(kind=GroupKind.ABELIAN, symbols=("x", "y"))
        basis = [vector_element(z2, (2, 0)), vector_element(z2, (0, 3))]

        assert abelian_membership(vector_element(z2, (4, 3)), basis)
        assert not abelian_membership(vector_element(z2, (1, 0)), basis)

    def test_membership_modulo_torsion(self):
        assert abelian_membership(parse_element(Z4, "t^6"), [parse_element(Z4, "t^2")])
        assert not abelian_membership(parse_element(Z4, "t"), [parse_element(Z4, "t^2")])

    def test_intersection_of_cyclic_lattices(self):
        z = GroupDesc(kind=GroupKind.ABELIAN, symbols=("x",))

        assert [abs(v[0]) for v in lattice_intersection(z, [(2,)], [(3,)])] == [6]

    def test_membership_needs_abelian_group(self):
        with pytest.raises(GroupMismatch):
            abelian_membership(parse_element(F2, "a"), [])


class TestHomomorphism:
    """Tests for Homomorphism"""

    def test_apply(self):
        phi = Homomorphism(F2, Z4, (parse_element(Z4, "t"), parse_element(Z4, "t^2")))

        assert phi.apply(parse_element(F2, "ab^-1a")) == parse_element(Z4, "1")

    def test_torsion_must_be_respected(self):
        z2 = GroupDesc(kind=GroupKind.ABELIAN, symbols=("u",), torsion=(2,))

        assert Homomorphism(z2, Z4, (parse_element(Z4, "t^2"),)).well_definedness_failure() is None
        assert "does not have order dividing 2" in Homomorphism(
            z2, Z4, (parse_element(Z4, "t"),)).well_definedness_failure()
