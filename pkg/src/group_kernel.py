from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.toolkit_errors import GroupMismatch, ParseError, UnknownSymbol

# Canonical elements for the three vertex-group classes the toolkit can decide:
# free groups, finitely generated abelian groups (Z^r + torsion), finite groups
# given by a multiplication table.
# Letters are (symbol, +1 | -1); symbol order is declaration order and
# x < x^-1 < y < y^-1. Words are compared ShortLex.

logger = logging.getLogger(__name__)

Letter = Tuple[str, int]
Word = Tuple[Letter, ...]
Payload = Union[Word, Tuple[int, ...], int]

IDENTITY_WORDS = ("", "1")
MAX_FINITE_ORDER = 512


class GroupKind(str, Enum):
    FREE = "free"
    ABELIAN = "abelian"
    FINITE = "finite"


class GroupDesc(BaseModel):
    """
    Description of a vertex or edge group.
    free: symbols are the free basis.
    abelian: symbols name the coordinates; the last len(torsion) coordinates are cyclic of the given orders.
    finite: symbols name the elements, table[i][j] is the index of symbols[i]*symbols[j].
    """
    model_config = ConfigDict(frozen=True)

    kind: GroupKind
    symbols: Tuple[str, ...] = ()
    torsion: Tuple[int, ...] = ()
    table: Tuple[Tuple[int, ...], ...] = ()

    @field_validator("symbols")
    @classmethod
    def symbols_are_identifiers(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        for symbol in v:
            if not symbol or not symbol[0].isalpha() or not symbol.replace("_", "").isalnum():
                raise ValueError(f"Invalid generator symbol: {symbol!r}")
        if len(set(v)) != len(v):
            raise ValueError(f"symbols must not contain duplicates; got {list(v)}")
        return v

    @field_validator("torsion")
    @classmethod
    def torsion_orders_at_least_two(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        for order in v:
            if order < 2:
                raise ValueError(f"torsion orders must be >= 2; got {order}")
        return v

    @model_validator(mode="after")
    def validate_by_kind(self) -> "GroupDesc":
        if self.kind == GroupKind.FREE:
            if self.torsion or self.table:
                raise ValueError("free groups take neither torsion nor table")
        elif self.kind == GroupKind.ABELIAN:
            if self.table:
                raise ValueError("abelian groups do not take a table")
            if len(self.torsion) > len(self.symbols):
                raise ValueError(
                    f"abelian group has {len(self.torsion)} torsion orders but only {len(self.symbols)} coordinates")
        else:
            _validate_group_table(self.symbols, self.table)
        return self

    @property
    def rank(self) -> int:
        """Free rank (number of infinite cyclic coordinates / free basis size)."""
        if self.kind == GroupKind.FREE:
            return len(self.symbols)
        if self.kind == GroupKind.ABELIAN:
            return len(self.symbols) - len(self.torsion)
        return 0

    @property
    def is_finite(self) -> bool:
        return self.rank == 0

    def letters(self) -> List[Letter]:
        """All letters in canonical order."""
        return [(symbol, sign) for symbol in self.symbols for sign in (1, -1)]


def _validate_group_table(symbols: Tuple[str, ...], table: Tuple[Tuple[int, ...], ...]) -> None:
    n = len(symbols)
    if n == 0:
        raise ValueError("finite group must have at least one element")
    if n > MAX_FINITE_ORDER:
        raise ValueError(f"finite groups are limited to {MAX_FINITE_ORDER} elements; got {n}")
    if len(table) != n or any(len(row) != n for row in table):
        raise ValueError(f"multiplication table must be {n}x{n}")
    for row in table:
        for entry in row:
            if not 0 <= entry < n:
                raise ValueError(f"multiplication table entry {entry} out of range")
    identities = [e for e in range(n) if all(table[e][x] == x and table[x][e] == x for x in range(n))]
    if len(identities) != 1:
        raise ValueError("multiplication table has no identity element")
    e = identities[0]
    for x in range(n):
        if not any(table[x][y] == e and table[y][x] == e for y in range(n)):
            raise ValueError(f"element {symbols[x]!r} has no inverse in the multiplication table")
    for x in range(n):
        for y in range(n):
            xy = table[x][y]
            for z in range(n):
                if table[xy][z] != table[x][table[y][z]]:
                    raise ValueError(
                        f"multiplication table is not associative at ({symbols[x]}, {symbols[y]}, {symbols[z]})")


# =======================================================================


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: GroupDesc
    payload: Payload

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.payload == other.payload and (self.group is other.group or self.group == other.group)

    def __hash__(self) -> int:
        return hash(self.payload)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def inverse(self) -> "GroupElement":
        return invert(self)

    def is_identity(self) -> bool:
        return self == identity(self.group)

    def word(self) -> Word:
        return element_word(self)

    def __str__(self) -> str:
        return format_word(element_word(self))

    def __repr__(self) -> str:
        return f"GroupElement({self})"


# =======================================================================
# Parsing


def parse_word(text: str, alphabet: Sequence[str]) -> Word:
    """
    Parse a word over *alphabet*.
    Syntax: symbols (longest match first), parentheses, powers ``^n`` (n may be negative),
    the suffix ``⁻¹``; whitespace is ignored; ``""`` and ``"1"`` are the identity.
    """
    if text.strip() in IDENTITY_WORDS:
        return ()
    return _WordParser(text, alphabet).parse()


class _WordParser:
    def __init__(self, text: str, alphabet: Sequence[str]):
        self.text = text
        self.pos = 0
        self.symbols = sorted(alphabet, key=len, reverse=True)

    def parse(self) -> Word:
        letters = self._sequence()
        self._skip_spaces()
        if self.pos < len(self.text):
            raise ParseError(f"Unbalanced ')' in word {self.text!r}", column=self.pos + 1)
        return tuple(letters)

    def _skip_spaces(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _sequence(self) -> List[Letter]:
        letters: List[Letter] = []
        while True:
            self._skip_spaces()
            if self.pos >= len(self.text) or self.text[self.pos] == ")":
                return letters
            letters.extend(self._item())

    def _item(self) -> List[Letter]:
        start = self.pos
        if self.text[self.pos] == "(":
            self.pos += 1
            inner = self._sequence()
            if self.pos >= len(self.text) or self.text[self.pos] != ")":
                raise ParseError(f"Missing ')' in word {self.text!r}", column=start + 1)
            self.pos += 1
        elif self.text[self.pos] == "1" and self._symbol_at(self.pos) is None:
            self.pos += 1
            inner = []
        else:
            symbol = self._symbol_at(self.pos)
            if symbol is None:
                end = self.pos
                while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                    end += 1
                raise UnknownSymbol(self.text[self.pos:max(end, self.pos + 1)], column=self.pos + 1)
            self.pos += len(symbol)
            inner = [(symbol, 1)]
        return _power_letters(inner, self._exponent())

    def _symbol_at(self, pos: int) -> Optional[str]:
        for symbol in self.symbols:
            if self.text.startswith(symbol, pos):
                return symbol
        return None

    def _exponent(self) -> int:
        if self.text.startswith("⁻¹", self.pos):
            self.pos += 2
            return -1
        if self.pos >= len(self.text) or self.text[self.pos] != "^":
            return 1
        self.pos += 1
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] in "+-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        digits = self.text[start:self.pos]
        if digits in ("", "+", "-"):
            raise ParseError(f"Expected an integer exponent in word {self.text!r}", column=start + 1)
        return int(digits)


def _power_letters(letters: List[Letter], exponent: int) -> List[Letter]:
    if exponent >= 0:
        return letters * exponent
    return invert_word(tuple(letters)) * -exponent


def invert_word(word: Sequence[Letter]) -> List[Letter]:
    return [(symbol, -sign) for symbol, sign in reversed(word)]


def format_word(word: Sequence[Letter]) -> str:
    """Render a word; runs of one letter become powers. Single-character symbols are written without separators."""
    if not word:
        return "1"
    tokens = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] == word[i]:
            j += 1
        symbol, sign = word[i]
        exponent = sign * (j - i)
        tokens.append(symbol if exponent == 1 else f"{symbol}^{exponent}")
        i = j
    separator = "" if all(len(symbol) == 1 for symbol, _ in word) else " "
    return separator.join(tokens)


# =======================================================================
# Canonical arithmetic


@lru_cache(maxsize=None)
def _symbol_positions(group: GroupDesc) -> Dict[str, int]:
    return {symbol: i for i, symbol in enumerate(group.symbols)}


@lru_cache(maxsize=None)
def _finite_identity(group: GroupDesc) -> int:
    n = len(group.symbols)
    return next(e for e in range(n) if all(group.table[e][x] == x for x in range(n)))


@lru_cache(maxsize=None)
def _finite_inverses(group: GroupDesc) -> Tuple[int, ...]:
    e = _finite_identity(group)
    n = len(group.symbols)
    return tuple(next(y for y in range(n) if group.table[x][y] == e) for x in range(n))


def letter_index(group: GroupDesc, letter: Letter) -> int:
    return 2 * _symbol_positions(group)[letter[0]] + (0 if letter[1] > 0 else 1)


def free_reduce(letters: Sequence[Letter]) -> Word:
    out: List[Letter] = []
    for symbol, sign in letters:
        if out and out[-1][0] == symbol and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((symbol, sign))
    return tuple(out)


def _normalize_vector(group: GroupDesc, vector: Sequence[int]) -> Tuple[int, ...]:
    rank = group.rank
    return tuple(value if i < rank else value % group.torsion[i - rank] for i, value in enumerate(vector))


def identity(group: GroupDesc) -> GroupElement:
    if group.kind == GroupKind.FREE:
        return GroupElement(group, ())
    if group.kind == GroupKind.ABELIAN:
        return GroupElement(group, (0,) * len(group.symbols))
    return GroupElement(group, _finite_identity(group))


def reduce(group: GroupDesc, raw: Sequence[Letter]) -> GroupElement:
    """Canonical element of *group* represented by the word *raw*."""
    positions = _symbol_positions(group)
    for symbol, _ in raw:
        if symbol not in positions:
            raise UnknownSymbol(symbol)
    if group.kind == GroupKind.FREE:
        return GroupElement(group, free_reduce(raw))
    if group.kind == GroupKind.ABELIAN:
        vector = [0] * len(group.symbols)
        for symbol, sign in raw:
            vector[positions[symbol]] += sign
        return GroupElement(group, _normalize_vector(group, vector))
    inverses = _finite_inverses(group)
    index = _finite_identity(group)
    for symbol, sign in raw:
        factor = positions[symbol] if sign > 0 else inverses[positions[symbol]]
        index = group.table[index][factor]
    return GroupElement(group, index)


def vector_element(group: GroupDesc, vector: Sequence[int]) -> GroupElement:
    if group.kind != GroupKind.ABELIAN:
        raise GroupMismatch(f"vector_element needs an abelian group; got {group.kind.value}")
    return GroupElement(group, _normalize_vector(group, vector))


def parse_element(group: GroupDesc, text: str) -> GroupElement:
    return reduce(group, parse_word(text, group.symbols))


def letter_element(group: GroupDesc, letter: Letter) -> GroupElement:
    return reduce(group, (letter,))


def _check_same_group(x: GroupElement, y: GroupElement) -> None:
    if x.group is not y.group and x.group != y.group:
        raise GroupMismatch(f"Elements {x} and {y} belong to different groups")


def multiply(x: GroupElement, y: GroupElement) -> GroupElement:
    _check_same_group(x, y)
    group = x.group
    if group.kind == GroupKind.FREE:
        return GroupElement(group, free_reduce(x.payload + y.payload))
    if group.kind == GroupKind.ABELIAN:
        return GroupElement(group, _normalize_vector(group, [a + b for a, b in zip(x.payload, y.payload)]))
    return GroupElement(group, group.table[x.payload][y.payload])


def invert(x: GroupElement) -> GroupElement:
    group = x.group
    if group.kind == GroupKind.FREE:
        return GroupElement(group, tuple(invert_word(x.payload)))
    if group.kind == GroupKind.ABELIAN:
        return GroupElement(group, _normalize_vector(group, [-a for a in x.payload]))
    return GroupElement(group, _finite_inverses(group)[x.payload])


def power(x: GroupElement, n: int) -> GroupElement:
    group = x.group
    if group.kind == GroupKind.ABELIAN:
        return GroupElement(group, _normalize_vector(group, [n * a for a in x.payload]))
    base = x if n >= 0 else invert(x)
    if group.kind == GroupKind.FREE:
        return GroupElement(group, free_reduce(base.payload * abs(n)))
    result = identity(group)
    for _ in range(abs(n) % max(1, _finite_order_of(base))):
        result = multiply(result, base)
    return result


def _finite_order_of(x: GroupElement) -> int:
    e = _finite_identity(x.group)
    order, index = 1, x.payload
    while index != e:
        index = x.group.table[index][x.payload]
        order += 1
    return order


def multiply_all(group: GroupDesc, elements: Sequence[GroupElement]) -> GroupElement:
    result = identity(group)
    for element in elements:
        result = multiply(result, element)
    return result


# =======================================================================
# Canonical words and ShortLex


def element_word(x: GroupElement) -> Word:
    """ShortLex-least word representing x."""
    group = x.group
    if group.kind == GroupKind.FREE:
        return x.payload
    if group.kind == GroupKind.ABELIAN:
        letters: List[Letter] = []
        rank = group.rank
        for i, (symbol, value) in enumerate(zip(group.symbols, x.payload)):
            if i >= rank:
                order = group.torsion[i - rank]
                value = value if value <= order // 2 else value - order
            letters.extend([(symbol, 1 if value > 0 else -1)] * abs(value))
        return tuple(letters)
    return _finite_words(group)[x.payload]


@lru_cache(maxsize=None)
def _finite_words(group: GroupDesc) -> Dict[int, Word]:
    start = _finite_identity(group)
    words: Dict[int, Word] = {start: ()}
    frontier = [start]
    while frontier:
        next_frontier = []
        for index in frontier:
            for letter in group.letters():
                target = multiply(GroupElement(group, index), letter_element(group, letter)).payload
                if target not in words:
                    words[target] = words[index] + (letter,)
                    next_frontier.append(target)
        frontier = next_frontier
    return words


def word_length(x: GroupElement) -> int:
    return len(element_word(x))


def shortlex_key(x: GroupElement) -> Tuple[int, Tuple[int, ...]]:
    word = element_word(x)
    return len(word), tuple(letter_index(x.group, letter) for letter in word)


def enumerate_elements(group: GroupDesc, max_length: int) -> Iterator[GroupElement]:
    """
    Elements with ShortLex-least word of length <= max_length, in ShortLex order.
    Least words are prefix closed, so extending only least words is enough.
    """
    start = identity(group)
    seen = {start.payload}
    yield start
    frontier = [start]
    letters = group.letters()
    for _ in range(max_length):
        next_frontier = []
        for element in frontier:
            word = element_word(element)
            for letter in letters:
                if word and group.kind == GroupKind.FREE and word[-1] == (letter[0], -letter[1]):
                    continue
                candidate = multiply(element, letter_element(group, letter))
                if candidate.payload in seen:
                    continue
                seen.add(candidate.payload)
                next_frontier.append(candidate)
                yield candidate
        frontier = next_frontier
        if not frontier:
            return


def all_elements(group: GroupDesc) -> List[GroupElement]:
    if not group.is_finite:
        raise GroupMismatch(f"Group with symbols {group.symbols} is infinite")
    return list(enumerate_elements(group, max(1, len(group.letters()) + sum(group.torsion))))


# =======================================================================
# Integer lattices


@dataclass(frozen=True)
class EchelonForm:
    """
    Row echelon form over Z: pivots strictly increasing and positive,
    entries above each pivot reduced into [0, pivot).
    transform[i] writes rows[i] as a combination of the input rows;
    kernel rows are combinations of the input rows that vanish.
    """
    ncols: int
    rows: Tuple[Tuple[int, ...], ...]
    pivots: Tuple[int, ...]
    transform: Tuple[Tuple[int, ...], ...] = ()
    kernel: Tuple[Tuple[int, ...], ...] = ()

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vector: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Canonical remainder of *vector* modulo the lattice, and the quotients used per echelon row."""
        remainder = list(vector)
        quotients = []
        for row, column in zip(self.rows, self.pivots):
            q = remainder[column] // row[column]
            if q:
                remainder = [a - q * b for a, b in zip(remainder, row)]
            quotients.append(q)
        return tuple(remainder), tuple(quotients)

    def contains(self, vector: Sequence[int]) -> bool:
        remainder, _ = self.reduce(vector)
        return not any(remainder)


def integer_echelon(rows: Sequence[Sequence[int]], ncols: int, track: bool = False) -> EchelonForm:
    work = [list(row) for row in rows]
    m = len(work)
    trans = [[1 if i == j else 0 for j in range(m)] for i in range(m)] if track else None

    def add_multiple(target: int, source: int, q: int) -> None:
        work[target] = [a - q * b for a, b in zip(work[target], work[source])]
        if trans is not None:
            trans[target] = [a - q * b for a, b in zip(trans[target], trans[source])]

    def swap(i: int, j: int) -> None:
        work[i], work[j] = work[j], work[i]
        if trans is not None:
            trans[i], trans[j] = trans[j], trans[i]

    pivots: List[int] = []
    r = 0
    for column in range(ncols):
        if r >= m:
            break
        while True:
            nonzero = [i for i in range(r, m) if work[i][column] != 0]
            if not nonzero:
                break
            smallest = min(nonzero, key=lambda i: (abs(work[i][column]), i))
            swap(r, smallest)
            finished = True
            for i in range(r + 1, m):
                if work[i][column]:
                    add_multiple(i, r, work[i][column] // work[r][column])
                    if work[i][column]:
                        finished = False
            if finished:
                break
        if r >= m or work[r][column] == 0:
            continue
        if work[r][column] < 0:
            work[r] = [-a for a in work[r]]
            if trans is not None:
                trans[r] = [-a for a in trans[r]]
        for i in range(r):
            q = work[i][column] // work[r][column]
            if q:
                add_multiple(i, r, q)
        pivots.append(column)
        r += 1
    return EchelonForm(
        ncols=ncols,
        rows=tuple(tuple(row) for row in work[:r]),
        pivots=tuple(pivots),
        transform=tuple(tuple(row) for row in trans[:r]) if trans is not None else (),
        kernel=tuple(tuple(row) for row in trans[r:]) if trans is not None else (),
    )


def relation_rows(group: GroupDesc) -> List[Tuple[int, ...]]:
    """Rows d_i * e_i for the torsion coordinates of an abelian group."""
    n = len(group.symbols)
    rank = group.rank
    return [tuple(order if j == rank + i else 0 for j in range(n)) for i, order in enumerate(group.torsion)]


def subgroup_lattice(group: GroupDesc, generators: Sequence[GroupElement], track: bool = False) -> EchelonForm:
    rows = [tuple(g.payload) for g in generators] + relation_rows(group)
    return integer_echelon(rows, len(group.symbols), track=track)


def abelian_membership(target: GroupElement, basis: Sequence[GroupElement]) -> bool:
    """True iff target lies in the subgroup generated by basis (torsion handled by relation rows)."""
    if target.group.kind != GroupKind.ABELIAN:
        raise GroupMismatch(f"abelian_membership needs an abelian group; got {target.group.kind.value}")
    for element in basis:
        _check_same_group(target, element)
    return subgroup_lattice(target.group, basis).contains(target.payload)


def lattice_intersection(group: GroupDesc, first: Sequence[Sequence[int]], second: Sequence[Sequence[int]]) -> List[Tuple[int, ...]]:
    """Generators of the intersection of two lattices (each already containing the relation rows)."""
    stacked = [tuple(row) for row in first] + [tuple(-a for a in row) for row in second]
    echelon = integer_echelon(stacked, len(group.symbols), track=True)
    generators = []
    for combination in echelon.kernel:
        vector = [0] * len(group.symbols)
        for coefficient, row in zip(combination[:len(first)], first):
            if coefficient:
                vector = [a + coefficient * b for a, b in zip(vector, row)]
        if any(vector):
            generators.append(tuple(vector))
    return generators


# =======================================================================


@dataclass(frozen=True)
class Homomorphism:
    """A map defined on the generators (free / abelian) or elements (finite) of *source*."""
    source: GroupDesc
    target: GroupDesc
    images: Tuple[GroupElement, ...]

    def image_of_symbol(self, symbol: str) -> GroupElement:
        return self.images[_symbol_positions(self.source)[symbol]]

    def apply(self, x: GroupElement) -> GroupElement:
        result = identity(self.target)
        for symbol, sign in element_word(x):
            image = self.image_of_symbol(symbol)
            result = multiply(result, image if sign > 0 else invert(image))
        return result

    def well_definedness_failure(self) -> Optional[str]:
        """None if the generator images respect the relations of the source group, else a reason."""
        if self.source.kind == GroupKind.ABELIAN:
            for i, x in enumerate(self.images):
                for y in self.images[i + 1:]:
                    if multiply(x, y) != multiply(y, x):
                        return f"images {x} and {y} do not commute"
            rank = self.source.rank
            for i, order in enumerate(self.source.torsion):
                if not power(self.images[rank + i], order).is_identity():
                    return f"image of {self.source.symbols[rank + i]} does not have order dividing {order}"
        elif self.source.kind == GroupKind.FINITE:
            n = len(self.source.symbols)
            for i in range(n):
                for j in range(n):
                    if self.images[self.source.table[i][j]] != multiply(self.images[i], self.images[j]):
                        return (f"image of {self.source.symbols[i]}*{self.source.symbols[j]} "
                                f"is not the product of the images")
        return None
