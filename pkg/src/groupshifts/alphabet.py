"""Alphabets, subgroups of their finite powers, and homomorphisms.

An alphabet is a finite group presented one of four ways: an explicit
multiplication table, a direct product of cyclic groups, a permutation group
given by generators, or a GF(p) vector space.  The first three ("finite
variants") encode elements as integer indices into a canonical enumeration;
vector spaces encode elements as tuples of residues mod p.

Subgroups of a power A^k are the workhorse data structure.  Finite variants
materialize the full element set (bounded by the alphabet's order cap) and
canonicalize as the sorted tuple of element tuples; vector-space subgroups
keep a reduced row echelon basis over GF(p) and never enumerate unless asked.
Two subgroups are equal as sets exactly when their canonical forms match.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from . import gfmat
from .errors import CapacityError, InvariantError, ValidationError

Letter = Union[int, tuple]

DEFAULT_ORDER_CAP = 2 ** 16
# full validation of a raw multiplication table is O(n^3)
TABLE_VALIDATION_LIMIT = 128
# a product table has (size**arity)**2 entries
POWER_TABLE_LIMIT = 2048


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


class Alphabet:
    """Common interface of the four alphabet variants."""

    kind: str
    order_cap: int

    @property
    def size(self) -> int:
        raise NotImplementedError

    @property
    def identity(self) -> Letter:
        raise NotImplementedError

    @property
    def is_linear(self) -> bool:
        return False

    def op(self, a: Letter, b: Letter) -> Letter:
        raise NotImplementedError

    def inv(self, a: Letter) -> Letter:
        raise NotImplementedError

    def elements(self) -> Iterator[Letter]:
        raise NotImplementedError

    def is_letter(self, a: Letter) -> bool:
        raise NotImplementedError

    def generators(self) -> list[Letter]:
        raise NotImplementedError

    def power(self, d: int) -> "PowerCoding":
        """The alphabet A^d with pack/unpack maps between a d-tuple of
        letters and a single letter of the power alphabet."""
        raise NotImplementedError

    def key(self) -> tuple:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return self.describe()

    def check_letter(self, a: Letter) -> None:
        if not self.is_letter(a):
            raise ValidationError(f"invalid element {a!r} for {self.describe()}")


class TableGroup(Alphabet):
    """Finite group given by an explicit multiplication table.

    ``table[a][b]`` is the index of a*b, ``inverse[a]`` of a^-1.  Unless
    ``trusted`` is set, the table is exhaustively validated: two-sided
    identity, two-sided inverses, associativity.
    """

    kind = "table"

    def __init__(self, table: Sequence[Sequence[int]], inverse: Sequence[int],
                 identity: int, order_cap: int = DEFAULT_ORDER_CAP,
                 trusted: bool = False):
        self._table = tuple(tuple(int(x) for x in row) for row in table)
        self._inverse = tuple(int(x) for x in inverse)
        self._identity = int(identity)
        self.order_cap = order_cap
        n = len(self._table)
        if not trusted:
            self._validate(n)

    def _validate(self, n: int) -> None:
        if n == 0:
            raise ValidationError("table group must be nonempty")
        if any(len(row) != n for row in self._table):
            raise ValidationError("multiplication table must be square")
        if len(self._inverse) != n:
            raise ValidationError("inverse table length must match group order")
        for row in self._table:
            for x in row:
                if not 0 <= x < n:
                    raise ValidationError(f"table entry {x} out of range")
        e = self._identity
        if not 0 <= e < n:
            raise ValidationError("identity index out of range")
        for a in range(n):
            if self._table[e][a] != a or self._table[a][e] != a:
                raise ValidationError(f"index {e} is not a two-sided identity")
            b = self._inverse[a]
            if not 0 <= b < n:
                raise ValidationError(f"inverse entry {b} out of range")
            if self._table[a][b] != e or self._table[b][a] != e:
                raise ValidationError(f"{b} is not a two-sided inverse of {a}")
        if n > TABLE_VALIDATION_LIMIT:
            raise CapacityError(
                f"table of order {n} exceeds the validation limit "
                f"{TABLE_VALIDATION_LIMIT}; use a structured variant instead")
        t = self._table
        for a in range(n):
            ta = t[a]
            for b in range(n):
                tab = ta[b]
                tb = t[b]
                for c in range(n):
                    if t[tab][c] != ta[tb[c]]:
                        raise ValidationError(
                            f"table is not associative at ({a},{b},{c})")

    @property
    def size(self) -> int:
        return len(self._table)

    @property
    def identity(self) -> int:
        return self._identity

    def op(self, a: int, b: int) -> int:
        return self._table[a][b]

    def inv(self, a: int) -> int:
        return self._inverse[a]

    def elements(self) -> Iterator[int]:
        return iter(range(self.size))

    def is_letter(self, a: Letter) -> bool:
        return isinstance(a, int) and 0 <= a < self.size

    def generators(self) -> list[int]:
        return list(range(self.size))

    def power(self, d: int) -> "PowerCoding":
        size = self.size ** d
        if size > POWER_TABLE_LIMIT:
            raise CapacityError(
                f"table power of order {size} exceeds limit {POWER_TABLE_LIMIT}")
        radix = [self.size ** (d - 1 - i) for i in range(d)]

        def unpack_digits(x: int) -> tuple[int, ...]:
            return tuple((x // r) % self.size for r in radix)

        table = []
        inverse = []
        for x in range(size):
            dx = unpack_digits(x)
            inverse.append(sum(self._inverse[v] * r for v, r in zip(dx, radix)))
            row = []
            for y in range(size):
                dy = unpack_digits(y)
                row.append(sum(self._table[u][v] * r
                               for u, v, r in zip(dx, dy, radix)))
            table.append(row)
        ident = sum(self._identity * r for r in radix)
        alpha = TableGroup(table, inverse, ident, order_cap=self.order_cap,
                           trusted=True)
        pack = lambda t: sum(v * r for v, r in zip(t, radix))
        return PowerCoding(self, d, alpha, pack, unpack_digits)

    def key(self) -> tuple:
        return ("table", self._table, self._inverse, self._identity)

    def describe(self) -> str:
        return f"table group of order {self.size}"

    def table_rows(self) -> tuple[tuple[int, ...], ...]:
        return self._table

    def inverse_row(self) -> tuple[int, ...]:
        return self._inverse


class CyclicProduct(Alphabet):
    """Direct product of cyclic groups Z/n1 x ... x Z/nr, elements encoded
    as mixed-radix indices (big-endian in the factor order)."""

    kind = "cyclic_product"

    def __init__(self, orders: Sequence[int], order_cap: int = DEFAULT_ORDER_CAP):
        self.orders = tuple(int(n) for n in orders)
        if not self.orders:
            raise ValidationError("cyclic product needs at least one factor")
        if any(n < 2 for n in self.orders):
            raise ValidationError("cyclic factor orders must be >= 2")
        self.order_cap = order_cap
        self._radix = []
        acc = 1
        for n in reversed(self.orders):
            self._radix.append(acc)
            acc *= n
        self._radix.reverse()
        self._size = acc

    @property
    def size(self) -> int:
        return self._size

    @property
    def identity(self) -> int:
        return 0

    def digits(self, a: int) -> tuple[int, ...]:
        return tuple((a // r) % n for r, n in zip(self._radix, self.orders))

    def from_digits(self, digits: Sequence[int]) -> int:
        return sum((d % n) * r for d, n, r in zip(digits, self.orders, self._radix))

    def op(self, a: int, b: int) -> int:
        da, db = self.digits(a), self.digits(b)
        return self.from_digits([x + y for x, y in zip(da, db)])

    def inv(self, a: int) -> int:
        return self.from_digits([-x for x in self.digits(a)])

    def elements(self) -> Iterator[int]:
        return iter(range(self._size))

    def is_letter(self, a: Letter) -> bool:
        return isinstance(a, int) and 0 <= a < self._size

    def generators(self) -> list[int]:
        return [self.from_digits([1 if i == j else 0 for j in range(len(self.orders))])
                for i in range(len(self.orders))]

    def power(self, d: int) -> "PowerCoding":
        alpha = CyclicProduct(self.orders * d, order_cap=self.order_cap)
        r = len(self.orders)

        def pack(t: tuple[int, ...]) -> int:
            digits: list[int] = []
            for a in t:
                digits.extend(self.digits(a))
            return alpha.from_digits(digits)

        def unpack(x: int) -> tuple[int, ...]:
            digits = alpha.digits(x)
            return tuple(self.from_digits(digits[i * r:(i + 1) * r])
                         for i in range(d))

        return PowerCoding(self, d, alpha, pack, unpack)

    def key(self) -> tuple:
        return ("cyclic", self.orders)

    def describe(self) -> str:
        return "x".join(f"C{n}" for n in self.orders)


class PermutationAlphabet(Alphabet):
    """Finite permutation group on {0..degree-1}, materialized by closure of
    its generators and indexed by the sorted list of image tuples."""

    kind = "permutation"

    def __init__(self, degree: int, generators: Sequence[Sequence[int]],
                 order_cap: int = DEFAULT_ORDER_CAP):
        if degree < 1:
            raise ValidationError("permutation degree must be >= 1")
        self.degree = degree
        self.order_cap = order_cap
        gens = []
        for g in generators:
            t = tuple(int(x) for x in g)
            if sorted(t) != list(range(degree)):
                raise ValidationError(f"{t} is not a permutation of 0..{degree - 1}")
            gens.append(t)
        self._gen_perms = tuple(gens)
        ident = tuple(range(degree))
        elems = {ident}
        frontier = [ident]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = tuple(x[g[i]] for i in range(degree))
                if y not in elems:
                    if len(elems) >= order_cap:
                        raise CapacityError(
                            f"permutation group closure exceeds order cap "
                            f"{order_cap}")
                    elems.add(y)
                    frontier.append(y)
        self._elems = tuple(sorted(elems))
        self._index = {perm: i for i, perm in enumerate(self._elems)}
        self._identity = self._index[ident]
        self._inv = tuple(self._index[self._invert(perm)] for perm in self._elems)

    @staticmethod
    def _invert(perm: tuple[int, ...]) -> tuple[int, ...]:
        out = [0] * len(perm)
        for i, v in enumerate(perm):
            out[v] = i
        return tuple(out)

    @property
    def size(self) -> int:
        return len(self._elems)

    @property
    def identity(self) -> int:
        return self._identity

    def perm(self, a: int) -> tuple[int, ...]:
        return self._elems[a]

    def index_of(self, perm: tuple[int, ...]) -> int:
        try:
            return self._index[perm]
        except KeyError:
            raise ValidationError(f"{perm} is not in the group") from None

    def op(self, a: int, b: int) -> int:
        # (a*b)(i) = a(b(i))
        pa, pb = self._elems[a], self._elems[b]
        return self._index[tuple(pa[pb[i]] for i in range(self.degree))]

    def inv(self, a: int) -> int:
        return self._inv[a]

    def elements(self) -> Iterator[int]:
        return iter(range(self.size))

    def is_letter(self, a: Letter) -> bool:
        return isinstance(a, int) and 0 <= a < self.size

    def generators(self) -> list[int]:
        return sorted({self._index[g] for g in self._gen_perms}) or [self._identity]

    def power(self, d: int) -> "PowerCoding":
        if self.size ** d > self.order_cap:
            raise CapacityError(
                f"permutation power of order {self.size ** d} exceeds order "
                f"cap {self.order_cap}")
        deg = self.degree
        emb_gens = []
        for i in range(d):
            for g in self._gen_perms:
                block = list(range(d * deg))
                for j in range(deg):
                    block[i * deg + j] = i * deg + g[j]
                emb_gens.append(tuple(block))
        alpha = PermutationAlphabet(d * deg, emb_gens, order_cap=self.order_cap)

        def pack(t: tuple[int, ...]) -> int:
            block: list[int] = []
            for i, a in enumerate(t):
                block.extend(i * deg + v for v in self._elems[a])
            return alpha.index_of(tuple(block))

        def unpack(x: int) -> tuple[int, ...]:
            perm = alpha.perm(x)
            return tuple(self._index[tuple(perm[i * deg + j] - i * deg
                                           for j in range(deg))]
                         for i in range(d))

        return PowerCoding(self, d, alpha, pack, unpack)

    def key(self) -> tuple:
        return ("perm", self.degree, self._elems)

    def describe(self) -> str:
        return f"permutation group on {self.degree} points, order {self.size}"


class VectorSpace(Alphabet):
    """GF(p)^n under addition; letters are n-tuples of residues mod p."""

    kind = "vector_space"

    def __init__(self, p: int, n: int, order_cap: int = DEFAULT_ORDER_CAP):
        if not _is_prime(p):
            raise ValidationError(f"p must be prime, got {p}")
        if n < 0:
            raise ValidationError("dimension must be >= 0")
        self.p = p
        self.n = n
        self.order_cap = order_cap

    @property
    def size(self) -> int:
        return self.p ** self.n

    @property
    def identity(self) -> tuple[int, ...]:
        return (0,) * self.n

    @property
    def is_linear(self) -> bool:
        return True

    def op(self, a: tuple, b: tuple) -> tuple:
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def inv(self, a: tuple) -> tuple:
        return tuple((-x) % self.p for x in a)

    def elements(self) -> Iterator[tuple]:
        return itertools.product(range(self.p), repeat=self.n)

    def is_letter(self, a: Letter) -> bool:
        return (isinstance(a, tuple) and len(a) == self.n
                and all(isinstance(x, int) and 0 <= x < self.p for x in a))

    def generators(self) -> list[tuple]:
        return [tuple(1 if i == j else 0 for j in range(self.n))
                for i in range(self.n)]

    def power(self, d: int) -> "PowerCoding":
        alpha = VectorSpace(self.p, self.n * d, order_cap=self.order_cap)
        n = self.n
        pack = lambda t: tuple(x for letter in t for x in letter)
        unpack = lambda v: tuple(tuple(v[i * n:(i + 1) * n]) for i in range(d))
        return PowerCoding(self, d, alpha, pack, unpack)

    def key(self) -> tuple:
        return ("vs", self.p, self.n)

    def describe(self) -> str:
        return f"GF({self.p})^{self.n}"


@dataclass(frozen=True)
class PowerCoding:
    """Product alphabet A^d plus the coding between its letters and d-tuples
    of A-letters."""

    base: Alphabet
    arity: int
    alphabet: Alphabet
    pack: Callable[[tuple], Letter] = field(compare=False)
    unpack: Callable[[Letter], tuple] = field(compare=False)


def identity_tuple(alphabet: Alphabet, k: int) -> tuple:
    return (alphabet.identity,) * k


def _validate_tuple(alphabet: Alphabet, k: int, t: Sequence) -> tuple:
    t = tuple(t)
    if len(t) != k:
        raise ValidationError(f"expected a {k}-tuple, got arity {len(t)}")
    for a in t:
        alphabet.check_letter(a)
    return t


def _tuple_op(alphabet: Alphabet, x: tuple, y: tuple) -> tuple:
    return tuple(alphabet.op(a, b) for a, b in zip(x, y))


def _tuple_inv(alphabet: Alphabet, x: tuple) -> tuple:
    return tuple(alphabet.inv(a) for a in x)


def _flatten(alphabet: VectorSpace, t: tuple) -> np.ndarray:
    return np.array([x for letter in t for x in letter], dtype=np.int64)


def _unflatten(alphabet: VectorSpace, vec: Sequence[int], k: int) -> tuple:
    n = alphabet.n
    vals = [int(v) for v in vec]
    return tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(k))


class Subgroup:
    """A subgroup of A^k on the normalized window {0..k-1}."""

    alphabet: Alphabet
    k: int

    def order(self) -> int:
        raise NotImplementedError

    def tuples(self) -> Iterator[tuple]:
        """All elements as k-tuples of letters (bounded by the order cap)."""
        raise NotImplementedError

    def contains(self, t: Sequence) -> bool:
        raise NotImplementedError

    def canonical(self) -> tuple:
        raise NotImplementedError

    def canonical_bytes(self) -> bytes:
        return repr(self.canonical()).encode()

    def is_full(self) -> bool:
        return self.order() == self.alphabet.size ** self.k

    def is_trivial(self) -> bool:
        return self.order() == 1

    def subset_of(self, other: "Subgroup") -> bool:
        raise NotImplementedError

    def size_label(self) -> str:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return isinstance(other, Subgroup) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return (f"Subgroup({self.alphabet.describe()}, k={self.k}, "
                f"{self.size_label()})")


class EnumeratedSubgroup(Subgroup):
    """Materialized subgroup of a finite-variant power."""

    def __init__(self, alphabet: Alphabet, k: int, elems: frozenset):
        self.alphabet = alphabet
        self.k = k
        self.elems = elems

    @classmethod
    def closure(cls, alphabet: Alphabet, k: int,
                gens: Iterable[Sequence]) -> "EnumeratedSubgroup":
        cap = alphabet.order_cap
        gen_tuples = [_validate_tuple(alphabet, k, g) for g in gens]
        ident = identity_tuple(alphabet, k)
        elems = {ident}
        frontier = list(gen_tuples)
        for g in gen_tuples:
            elems.add(g)
        while frontier:
            x = frontier.pop()
            for g in gen_tuples:
                y = _tuple_op(alphabet, x, g)
                if y not in elems:
                    if len(elems) >= cap:
                        raise CapacityError(
                            f"subgroup closure exceeds the order cap {cap}; "
                            f"construct the alphabet with a larger order_cap")
                    elems.add(y)
                    frontier.append(y)
        return cls(alphabet, k, frozenset(elems))

    @classmethod
    def from_elements(cls, alphabet: Alphabet, k: int,
                      elems: Iterable[tuple]) -> "EnumeratedSubgroup":
        return cls(alphabet, k, frozenset(elems))

    def order(self) -> int:
        return len(self.elems)

    def tuples(self) -> Iterator[tuple]:
        return iter(sorted(self.elems))

    def contains(self, t: Sequence) -> bool:
        return tuple(t) in self.elems

    def canonical(self) -> tuple:
        return ("enum", self.alphabet.key(), self.k, tuple(sorted(self.elems)))

    def subset_of(self, other: "Subgroup") -> bool:
        _check_compatible(self, other)
        assert isinstance(other, EnumeratedSubgroup)
        return self.elems <= other.elems

    def size_label(self) -> str:
        return f"order {len(self.elems)}"

    def generating_set(self) -> list[tuple]:
        """A small deterministic generating set (greedy over sorted elements)."""
        gens: list[tuple] = []
        span = EnumeratedSubgroup.closure(self.alphabet, self.k, [])
        for t in sorted(self.elems):
            if not span.contains(t):
                gens.append(t)
                span = EnumeratedSubgroup.closure(self.alphabet, self.k, gens)
                if span.order() == len(self.elems):
                    break
        return gens


class LinearSubgroup(Subgroup):
    """GF(p)-subspace of (GF(p)^n)^k, stored as an RREF basis of width n*k."""

    def __init__(self, alphabet: VectorSpace, k: int, basis: np.ndarray):
        self.alphabet = alphabet
        self.k = k
        self.basis = basis
        self.width = alphabet.n * k

    @classmethod
    def closure(cls, alphabet: VectorSpace, k: int,
                gens: Iterable[Sequence]) -> "LinearSubgroup":
        rows = [_flatten(alphabet, _validate_tuple(alphabet, k, g)) for g in gens]
        mat = gfmat.as_matrix(rows, alphabet.n * k, alphabet.p)
        basis, _ = gfmat.rref(mat, alphabet.p)
        return cls(alphabet, k, basis)

    @classmethod
    def from_basis(cls, alphabet: VectorSpace, k: int,
                   basis: np.ndarray) -> "LinearSubgroup":
        red, _ = gfmat.rref(basis, alphabet.p)
        return cls(alphabet, k, red)

    @property
    def rank(self) -> int:
        return int(self.basis.shape[0])

    def order(self) -> int:
        return self.alphabet.p ** self.rank

    def tuples(self) -> Iterator[tuple]:
        p = self.alphabet.p
        if self.order() > self.alphabet.order_cap:
            raise CapacityError(
                f"enumerating p^{self.rank} subspace elements exceeds the "
                f"order cap {self.alphabet.order_cap}")
        for coeffs in itertools.product(range(p), repeat=self.rank):
            vec = np.zeros(self.width, dtype=np.int64)
            for c, row in zip(coeffs, self.basis):
                vec = (vec + c * row) % p
            yield _unflatten(self.alphabet, vec, self.k)

    def contains(self, t: Sequence) -> bool:
        vec = _flatten(self.alphabet, _validate_tuple(self.alphabet, self.k, t))
        return gfmat.in_row_space(self.basis, vec, self.alphabet.p)

    def canonical(self) -> tuple:
        return ("lin", self.alphabet.key(), self.k,
                tuple(tuple(int(x) for x in row) for row in self.basis))

    def subset_of(self, other: "Subgroup") -> bool:
        _check_compatible(self, other)
        assert isinstance(other, LinearSubgroup)
        return all(gfmat.in_row_space(other.basis, row, self.alphabet.p)
                   for row in self.basis)

    def size_label(self) -> str:
        return f"rank {self.rank}"

    def annihilator(self) -> np.ndarray:
        return gfmat.annihilator(self.basis, self.width, self.alphabet.p)

    def pullback(self, k_new: int, index_map: Sequence[int]) -> "LinearSubgroup":
        """{x in A^k_new : (x[i] for i in index_map) in self}.

        index_map may repeat positions (wraparound windows); when it is
        injective this is the cylinder lift."""
        n, p = self.alphabet.n, self.alphabet.p
        sel = gfmat.zeros(self.width, n * k_new)
        for j, pos in enumerate(index_map):
            for t in range(n):
                sel[j * n + t, pos * n + t] = 1
        constraints = (self.annihilator() @ sel) % p
        return LinearSubgroup(self.alphabet, k_new,
                              gfmat.nullspace(constraints, p))

    def generating_set(self) -> list[tuple]:
        return [_unflatten(self.alphabet, row, self.k) for row in self.basis]


def _check_compatible(a: Subgroup, b: Subgroup) -> None:
    if a.alphabet != b.alphabet:
        raise ValidationError("subgroups live over different alphabets")
    if a.k != b.k:
        raise ValidationError(
            f"window length mismatch: {a.k} vs {b.k}")


def subgroup_closure(alphabet: Alphabet, k: int,
                     gens: Iterable[Sequence]) -> Subgroup:
    """Smallest subgroup of A^k containing the given k-tuples."""
    if k < 0:
        raise ValidationError("window length must be >= 0")
    if alphabet.is_linear:
        return LinearSubgroup.closure(alphabet, k, gens)
    return EnumeratedSubgroup.closure(alphabet, k, gens)


def full_subgroup(alphabet: Alphabet, k: int) -> Subgroup:
    if alphabet.is_linear:
        return LinearSubgroup(alphabet, k, gfmat.identity(alphabet.n * k))
    if alphabet.size ** k > alphabet.order_cap:
        raise CapacityError(
            f"full power of order {alphabet.size ** k} exceeds the order cap "
            f"{alphabet.order_cap}")
    elems = frozenset(itertools.product(alphabet.elements(), repeat=k))
    return EnumeratedSubgroup(alphabet, k, elems)


def trivial_subgroup(alphabet: Alphabet, k: int) -> Subgroup:
    return subgroup_closure(alphabet, k, [])


def subgroup_intersect(h: Subgroup, k: Subgroup) -> Subgroup:
    """H intersect K over the same alphabet and window."""
    _check_compatible(h, k)
    if isinstance(h, EnumeratedSubgroup) and isinstance(k, EnumeratedSubgroup):
        return EnumeratedSubgroup(h.alphabet, h.k, h.elems & k.elems)
    assert isinstance(h, LinearSubgroup) and isinstance(k, LinearSubgroup)
    basis = gfmat.intersect_row_spaces(h.basis, k.basis, h.alphabet.p)
    return LinearSubgroup(h.alphabet, h.k, basis)


def project(h: Subgroup, positions: Sequence[int]) -> Subgroup:
    """Coordinate projection of H onto the given positions (in order)."""
    positions = list(positions)
    if any(not 0 <= i < h.k for i in positions):
        raise ValidationError("projection positions outside the window")
    if isinstance(h, EnumeratedSubgroup):
        elems = frozenset(tuple(t[i] for i in positions) for t in h.elems)
        return EnumeratedSubgroup(h.alphabet, len(positions), elems)
    assert isinstance(h, LinearSubgroup)
    n = h.alphabet.n
    cols = [pos * n + t for pos in positions for t in range(n)]
    sub = h.basis[:, cols] if h.basis.size else gfmat.zeros(0, len(cols))
    basis, _ = gfmat.rref(sub, h.alphabet.p)
    return LinearSubgroup(h.alphabet, len(positions), basis)


def cylinder_lift(h: Subgroup, k_new: int,
                  positions: Optional[Sequence[int]] = None) -> Subgroup:
    """Full preimage of H under the projection A^k_new -> A^positions.

    positions defaults to {0..h.k-1}; it must be strictly increasing.  The
    remaining coordinates are free.
    """
    if positions is None:
        positions = list(range(h.k))
    positions = list(positions)
    if len(positions) != h.k:
        raise ValidationError("positions must match the subgroup window length")
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise ValidationError("positions must be strictly increasing")
    if positions and (positions[0] < 0 or positions[-1] >= k_new):
        raise ValidationError("positions outside the target window")
    if isinstance(h, LinearSubgroup):
        return h.pullback(k_new, positions)
    assert isinstance(h, EnumeratedSubgroup)
    alphabet = h.alphabet
    free = [i for i in range(k_new) if i not in set(positions)]
    total = len(h.elems) * alphabet.size ** len(free)
    if total > alphabet.order_cap:
        raise CapacityError(
            f"cylinder lift of order {total} exceeds the order cap "
            f"{alphabet.order_cap}")
    elems = set()
    for t in h.elems:
        for fill in itertools.product(alphabet.elements(), repeat=len(free)):
            row = [None] * k_new
            for pos, val in zip(positions, t):
                row[pos] = val
            for pos, val in zip(free, fill):
                row[pos] = val
            elems.add(tuple(row))
    return EnumeratedSubgroup(alphabet, k_new, frozenset(elems))


def chain_length_bound(alphabet: Alphabet, k: int) -> int:
    """Upper bound on the length of a strictly descending subgroup chain in
    A^k: the GF(p) dimension for vector spaces, floor(log2 |A|^k) otherwise."""
    if alphabet.is_linear:
        return alphabet.n * k
    return (alphabet.size ** k).bit_length() - 1


class Homomorphism:
    """Group homomorphism A^arity -> B^coarity between alphabet powers.

    Vector-space alphabets use a matrix over GF(p); finite variants use one
    factor table per domain coordinate (phi restricted to that coordinate's
    embedded copy of A), which determines phi since factor images must
    commute.  Mixed linear/finite pairs are rejected.
    """

    def __init__(self, dom: Alphabet, arity: int, cod: Alphabet, coarity: int,
                 matrix: Optional[np.ndarray] = None,
                 factor_tables: Optional[list] = None):
        self.dom = dom
        self.arity = arity
        self.cod = cod
        self.coarity = coarity
        self.matrix = matrix
        self.factor_tables = factor_tables

    # -- constructors -----------------------------------------------------

    @classmethod
    def linear_map(cls, dom: VectorSpace, arity: int, cod: VectorSpace,
                   coarity: int, matrix) -> "Homomorphism":
        if not (dom.is_linear and cod.is_linear):
            raise ValidationError("matrix rules need vector-space alphabets")
        if dom.p != cod.p:
            raise ValidationError("matrix rules need a common characteristic")
        mat = np.array(matrix, dtype=np.int64) % dom.p
        want = (cod.n * coarity, dom.n * arity)
        if mat.shape != want:
            raise ValidationError(
                f"rule matrix must have shape {want[0]}x{want[1]}, "
                f"got {mat.shape[0]}x{mat.shape[1]}")
        return cls(dom, arity, cod, coarity, matrix=mat)

    @classmethod
    def from_factor_tables(cls, dom: Alphabet, arity: int, cod: Alphabet,
                           coarity: int, tables: list, verify: bool = True
                           ) -> "Homomorphism":
        if dom.is_linear or cod.is_linear:
            raise ValidationError("factor tables need finite-variant alphabets")
        if len(tables) != arity:
            raise ValidationError("one factor table per domain coordinate")
        phi = cls(dom, arity, cod, coarity, factor_tables=tables)
        if verify:
            phi._verify_factors()
        return phi

    @classmethod
    def identity_map(cls, alphabet: Alphabet) -> "Homomorphism":
        if alphabet.is_linear:
            return cls.linear_map(alphabet, 1, alphabet, 1,
                                  gfmat.identity(alphabet.n))
        table = [[(a,) for a in alphabet.elements()]]
        return cls.from_factor_tables(alphabet, 1, alphabet, 1, table,
                                      verify=False)

    @classmethod
    def from_images(cls, dom: Alphabet, arity: int, cod: Alphabet,
                    gens: Sequence[Sequence], images: Sequence) -> "Homomorphism":
        """Rule given by images of a generating set of A^arity.

        For vector spaces the generators must span the domain and the map is
        solved linearly; for finite variants the assignment is extended by
        closure and verified exhaustively.
        """
        if len(gens) != len(images):
            raise ValidationError("generators and images must pair up")
        if dom.is_linear != cod.is_linear:
            raise ValidationError(
                "mixed vector-space/finite alphabets in one rule are not "
                "supported")
        if dom.is_linear:
            return cls._linear_from_images(dom, arity, cod, gens, images)
        return cls._finite_from_images(dom, arity, cod, gens, images)

    @classmethod
    def _linear_from_images(cls, dom: VectorSpace, arity: int,
                            cod: VectorSpace, gens, images) -> "Homomorphism":
        if dom.p != cod.p:
            raise ValidationError("rule needs a common characteristic")
        p = dom.p
        width = dom.n * arity
        rows = [_flatten(dom, _validate_tuple(dom, arity, g)) for g in gens]
        targets = [_flatten(cod, _validate_tuple(cod, 1, (im,))) for im in images]
        basis, _ = gfmat.rref(gfmat.as_matrix(rows, width, p), p)
        if basis.shape[0] < width:
            raise ValidationError(
                "generators do not span the domain; the rule is undetermined")
        # solve M @ e_j for each standard basis vector
        gen_mat = gfmat.as_matrix(rows, width, p)
        img_mat = gfmat.as_matrix(targets, cod.n, p)
        cols = []
        for j in range(width):
            e = np.zeros(width, dtype=np.int64)
            e[j] = 1
            coeffs = _solve_combination(gen_mat, e, p)
            cols.append((coeffs @ img_mat) % p)
        mat = np.array(cols, dtype=np.int64).T % p
        return cls.linear_map(dom, arity, cod, 1, mat)

    @classmethod
    def _finite_from_images(cls, dom: Alphabet, arity: int, cod: Alphabet,
                            gens, images) -> "Homomorphism":
        gen_tuples = [_validate_tuple(dom, arity, g) for g in gens]
        image_letters = []
        for im in images:
            cod.check_letter(im)
            image_letters.append((im,))
        ident = identity_tuple(dom, arity)
        coords = _split_embeds(dom, gen_tuples)
        if coords is not None:
            return cls._finite_from_embeds(dom, arity, cod, coords,
                                           gen_tuples, image_letters)
        # general generating set: extend over the whole power by closure
        if dom.size ** arity > dom.order_cap:
            raise CapacityError(
                f"rule verification over a power of order {dom.size ** arity} "
                f"exceeds the order cap {dom.order_cap}")
        known = {ident: (cod.identity,)}
        frontier = [ident]
        pairs = list(zip(gen_tuples, image_letters))
        for g, im in pairs:
            if g in known and known[g] != im:
                raise ValidationError("rule is not a homomorphism")
            known.setdefault(g, im)
        frontier = list(known)
        while frontier:
            x = frontier.pop()
            fx = known[x]
            for g, im in pairs:
                y = _tuple_op(dom, x, g)
                fy = (cod.op(fx[0], im[0]),)
                if y in known:
                    if known[y] != fy:
                        raise ValidationError(
                            "rule images are inconsistent: not a homomorphism")
                else:
                    known[y] = fy
                    frontier.append(y)
        if len(known) != dom.size ** arity:
            raise ValidationError(
                "generators do not generate the full power; the rule is "
                "undetermined")
        tables = []
        for i in range(arity):
            col = []
            for a in dom.elements():
                t = list(ident)
                t[i] = a
                col.append(known[tuple(t)])
            tables.append(col)
        return cls.from_factor_tables(dom, arity, cod, 1, tables, verify=True)

    @classmethod
    def _finite_from_embeds(cls, dom: Alphabet, arity: int, cod: Alphabet,
                            coords: dict, gen_tuples, image_letters
                            ) -> "Homomorphism":
        ident_letters = {i: {dom.identity: (cod.identity,)} for i in range(arity)}
        for (g, im) in zip(gen_tuples, image_letters):
            nz = [i for i, a in enumerate(g) if a != dom.identity]
            if not nz:
                if im != (cod.identity,):
                    raise ValidationError("identity generator must map to identity")
                continue
            i = nz[0]
            table = ident_letters[i]
            if g[i] in table and table[g[i]] != im:
                raise ValidationError("rule is not a homomorphism")
            table[g[i]] = im
        tables = []
        for i in range(arity):
            known = dict(ident_letters[i])
            seed = [a for a in known if a != dom.identity]
            frontier = list(known)
            while frontier:
                x = frontier.pop()
                fx = known[x]
                for g in seed:
                    y = dom.op(x, g)
                    fy = (cod.op(fx[0], known[g][0]),)
                    if y in known:
                        if known[y] != fy:
                            raise ValidationError(
                                f"images on coordinate {i} are inconsistent: "
                                f"not a homomorphism")
                    else:
                        known[y] = fy
                        frontier.append(y)
            if len(known) != dom.size:
                raise ValidationError(
                    f"coordinate {i} images do not determine the rule on the "
                    f"whole alphabet")
            tables.append([known[a] for a in dom.elements()])
        return cls.from_factor_tables(dom, arity, cod, 1, tables, verify=True)

    # -- verification ------------------------------------------------------

    def _verify_factors(self) -> None:
        dom, cod = self.dom, self.cod
        assert self.factor_tables is not None
        elems = list(dom.elements())
        index = {a: i for i, a in enumerate(elems)}
        gens = dom.generators()
        for i, table in enumerate(self.factor_tables):
            if len(table) != dom.size:
                raise ValidationError(f"factor table {i} has the wrong size")
            if table[index[dom.identity]] != identity_tuple(cod, self.coarity):
                raise ValidationError(
                    f"factor {i} does not map identity to identity")
            for a in elems:
                fa = table[index[a]]
                for b in elems:
                    lhs = table[index[dom.op(a, b)]]
                    rhs = _tuple_op(cod, fa, table[index[b]])
                    if lhs != rhs:
                        raise ValidationError(
                            f"factor {i} is not a homomorphism at "
                            f"({a!r},{b!r})")
        # images of distinct factors must commute elementwise, a structural
        # requirement for any homomorphism out of a direct product
        for i in range(self.arity):
            for j in range(i + 1, self.arity):
                ti, tj = self.factor_tables[i], self.factor_tables[j]
                for a in gens:
                    for b in gens:
                        x, y = ti[index[a]], tj[index[b]]
                        if _tuple_op(cod, x, y) != _tuple_op(cod, y, x):
                            raise ValidationError(
                                f"factor images on coordinates {i} and {j} do "
                                f"not commute; no such homomorphism exists")

    # -- evaluation --------------------------------------------------------

    def apply(self, t: Sequence) -> tuple:
        """Image of an arity-tuple of letters as a coarity-tuple of letters."""
        t = tuple(t)
        if len(t) != self.arity:
            raise ValidationError(
                f"expected a {self.arity}-tuple, got arity {len(t)}")
        if self.matrix is not None:
            vec = _flatten(self.dom, t)
            out = (self.matrix @ vec) % self.dom.p
            return _unflatten(self.cod, out, self.coarity)
        assert self.factor_tables is not None
        elems_index = self._dom_index()
        out = identity_tuple(self.cod, self.coarity)
        for table, a in zip(self.factor_tables, t):
            out = _tuple_op(self.cod, out, table[elems_index[a]])
        return out

    def _dom_index(self) -> dict:
        idx = getattr(self, "_idx_cache", None)
        if idx is None:
            idx = {a: i for i, a in enumerate(self.dom.elements())}
            self._idx_cache = idx
        return idx

    def compose(self, inner: "Homomorphism") -> "Homomorphism":
        """self after inner (inner's codomain power must match self's domain
        power)."""
        if inner.cod != self.dom or inner.coarity != self.arity:
            raise ValidationError("homomorphisms do not compose")
        if self.matrix is not None and inner.matrix is not None:
            mat = (self.matrix @ inner.matrix) % self.dom.p
            return Homomorphism(inner.dom, inner.arity, self.cod, self.coarity,
                                matrix=mat)
        assert self.factor_tables is not None and inner.factor_tables is not None
        tables = []
        for table in inner.factor_tables:
            tables.append([self.apply(v) for v in table])
        return Homomorphism(inner.dom, inner.arity, self.cod, self.coarity,
                            factor_tables=tables)


def _split_embeds(dom: Alphabet, gen_tuples) -> Optional[dict]:
    """Group generators by coordinate if every generator touches at most one
    coordinate; None when some generator is not an embedded letter."""
    coords: dict[int, list] = {}
    for g in gen_tuples:
        nz = [i for i, a in enumerate(g) if a != dom.identity]
        if len(nz) > 1:
            return None
        if nz:
            coords.setdefault(nz[0], []).append(g[nz[0]])
    return coords


def _solve_combination(rows: np.ndarray, target: np.ndarray, p: int) -> np.ndarray:
    """Coefficients c with c @ rows = target (rows need not be in RREF)."""
    red, pivots = gfmat.rref(rows, p)
    # track the row operations by augmenting with an identity
    aug = np.hstack([rows, gfmat.identity(rows.shape[0])])
    red_aug, _ = gfmat.rref(aug, p)
    # rows of red_aug: [rref | transform]
    v = target.copy() % p
    coeffs = np.zeros(rows.shape[0], dtype=np.int64)
    for row in red_aug:
        left = row[:rows.shape[1]]
        if not left.any():
            continue
        piv = int(np.argmax(left != 0))
        if v[piv]:
            coeffs = (coeffs + v[piv] * row[rows.shape[1]:]) % p
            v = (v - v[piv] * left) % p
    if v.any():
        raise ValidationError("target vector is outside the generated span")
    return coeffs


def hom_image(phi: Homomorphism, h: Subgroup) -> Subgroup:
    """phi(H) as a canonical subgroup of the codomain power."""
    if h.alphabet != phi.dom or h.k != phi.arity:
        raise ValidationError("subgroup does not live in the rule's domain")
    if isinstance(h, LinearSubgroup):
        assert phi.matrix is not None
        rows = (h.basis @ phi.matrix.T) % h.alphabet.p
        basis, _ = gfmat.rref(rows, h.alphabet.p)
        return LinearSubgroup(phi.cod, phi.coarity, basis)
    assert isinstance(h, EnumeratedSubgroup)
    elems = frozenset(phi.apply(t) for t in h.elems)
    return EnumeratedSubgroup(phi.cod, phi.coarity, elems)


def hom_preimage(phi: Homomorphism, k: Subgroup) -> Subgroup:
    """phi^{-1}(K) as a canonical subgroup of the domain power."""
    if k.alphabet != phi.cod or k.k != phi.coarity:
        raise ValidationError("subgroup does not live in the rule's codomain")
    if isinstance(k, LinearSubgroup):
        assert phi.matrix is not None
        p = k.alphabet.p
        constraints = (k.annihilator() @ phi.matrix) % p
        return LinearSubgroup(phi.dom, phi.arity, gfmat.nullspace(constraints, p))
    assert isinstance(k, EnumeratedSubgroup)
    dom = phi.dom
    total = dom.size ** phi.arity
    if total > dom.order_cap:
        raise CapacityError(
            f"fiber enumeration over a power of order {total} exceeds the "
            f"order cap {dom.order_cap}")
    elems = frozenset(t for t in itertools.product(dom.elements(),
                                                   repeat=phi.arity)
                      if k.contains(phi.apply(t)))
    return EnumeratedSubgroup(dom, phi.arity, elems)
