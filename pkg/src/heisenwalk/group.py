"""Exact arithmetic in the Heisenberg groups H_{p,d}.

An element is a d x d upper uni-triangular matrix over Z_p, stored as its
d(d-1)/2 strictly-upper entries.  Entries are ordered by super-diagonal
level: first (1,2), (2,3), ..., (d-1,d), then (1,3), (2,4), ..., and so on up
to (1,d).  With this order the first d-1 entries are exactly the image in the
Abelianisation Z_p^{d-1}, and for d = 3 an element reads (a, b, c) =
(M12, M23, M13).

Ranks are mixed-radix base p with entry (1,2) least significant, so the
identity has rank 0 and ``rank(g) % p**(d-1)`` is the rank of the
abelianised element.

Words are sequences of 0-based generator indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HeisenbergGroup",
    "GroupElement",
    "WordStats",
    "is_prime",
    "mul",
    "inv",
    "abelianize",
    "in_commutator",
    "rank",
    "unrank",
    "word_product",
    "word_stats",
    "f_poly",
    "d3_product_formula",
    "commutator",
    "step2_decomposition",
    "step2_decomposition_check",
]

# entry arithmetic is done in int64; products of two residues must fit
MAX_MODULUS = 2**31


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    for q in range(3, math.isqrt(p) + 1, 2):
        if p % q == 0:
            return False
    return True


@dataclass(frozen=True)
class HeisenbergGroup:
    """The group H_{p,d} of d x d uni-upper-triangular matrices mod p."""

    p: int
    d: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not isinstance(self.d, (int, np.integer)):
            raise TypeError("p and d must be integers")
        if self.d < 3:
            raise ValueError(f"d must be at least 3, got {self.d}")
        if not is_prime(int(self.p)):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.p >= MAX_MODULUS:
            raise ValueError(f"p must be below 2**31, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "d", int(self.d))

    # -- shape -------------------------------------------------------------

    @property
    def m(self) -> int:
        """Number of stored entries, d(d-1)/2."""
        return self.d * (self.d - 1) // 2

    @property
    def n(self) -> int:
        """Group order p^(d(d-1)/2), as an exact integer."""
        return self.p**self.m

    @property
    def abelian_order(self) -> int:
        return self.p ** (self.d - 1)

    @property
    def commutator_order(self) -> int:
        return self.p ** ((self.d - 1) * (self.d - 2) // 2)

    @cached_property
    def positions(self) -> tuple[tuple[int, int], ...]:
        """0-based matrix positions (a, b) of the stored entries, in order."""
        return tuple(
            (a, a + level)
            for level in range(1, self.d)
            for a in range(self.d - level)
        )

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        return {pos: i for i, pos in enumerate(self.positions)}

    @cached_property
    def _mul_terms(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        # (g h)_{ab} = g_ab + h_ab + sum_{a<c<b} g_ac h_cb
        idx = self.index
        return tuple(
            tuple((idx[a, c], idx[c, b]) for c in range(a + 1, b))
            for a, b in self.positions
        )

    @cached_property
    def _radix(self) -> np.ndarray:
        if self.n >= 2**63:
            raise OverflowError("group too large for int64 ranks")
        return np.array([self.p**i for i in range(self.m)], dtype=np.int64)

    # -- elements ----------------------------------------------------------

    def element(self, entries: Iterable[int]) -> GroupElement:
        return GroupElement(self, tuple(int(e) for e in entries))

    def identity(self) -> GroupElement:
        return GroupElement(self, (0,) * self.m)

    def random_element(self, rng: np.random.Generator) -> GroupElement:
        return self.element(rng.integers(0, self.p, size=self.m))

    def from_matrix(self, M) -> GroupElement:
        M = np.asarray(M)
        if M.shape != (self.d, self.d):
            raise ValueError(f"expected a {self.d}x{self.d} matrix")
        if np.any(np.tril(M, -1) % self.p) or np.any(np.diag(M) % self.p != 1):
            raise ValueError("matrix is not upper uni-triangular mod p")
        return self.element(int(M[a, b]) % self.p for a, b in self.positions)

    def to_matrix(self, g: GroupElement) -> np.ndarray:
        M = np.eye(self.d, dtype=np.int64)
        for (a, b), e in zip(self.positions, g.entries):
            M[a, b] = e
        return M

    def elements(self):
        """Iterate over all elements in rank order."""
        for r in range(self.n):
            yield self.unrank(r)

    # -- scalar operations ---------------------------------------------------

    def mul(self, g: GroupElement, h: GroupElement) -> GroupElement:
        self._check(g)
        self._check(h)
        p, x, y = self.p, g.entries, h.entries
        out = []
        for i, terms in enumerate(self._mul_terms):
            v = x[i] + y[i]
            for j1, j2 in terms:
                v += x[j1] * y[j2]
            out.append(v % p)
        return GroupElement(self, tuple(out))

    def inv(self, g: GroupElement) -> GroupElement:
        self._check(g)
        # entries of g^{-1} solved level by level from g * g^{-1} = 1
        p, x = self.p, g.entries
        out = [0] * self.m
        for i, terms in enumerate(self._mul_terms):
            v = -x[i]
            for j1, j2 in terms:
                v -= x[j1] * out[j2]
            out[i] = v % p
        return GroupElement(self, tuple(out))

    def power(self, g: GroupElement, e: int) -> GroupElement:
        if e < 0:
            g, e = self.inv(g), -e
        result, base = self.identity(), g
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def abelianize(self, g: GroupElement) -> tuple[int, ...]:
        self._check(g)
        return g.entries[: self.d - 1]

    def in_commutator(self, g: GroupElement) -> bool:
        return not any(self.abelianize(g))

    def rank(self, g: GroupElement) -> int:
        self._check(g)
        r = 0
        for e in reversed(g.entries):
            r = r * self.p + e
        return r

    def unrank(self, r: int) -> GroupElement:
        r = int(r)
        if not 0 <= r < self.n:
            raise ValueError(f"rank {r} out of range [0, {self.n})")
        out = []
        for _ in range(self.m):
            r, e = divmod(r, self.p)
            out.append(e)
        return GroupElement(self, tuple(out))

    # -- vectorised operations on (..., m) entry arrays ----------------------

    def mul_rows(self, X, Y) -> np.ndarray:
        """Entrywise group product of broadcastable arrays of shape (..., m)."""
        X = np.asarray(X, dtype=np.int64)
        Y = np.asarray(Y, dtype=np.int64)
        p = self.p
        shape = np.broadcast_shapes(X.shape, Y.shape)
        out = np.empty(shape, dtype=np.int64)
        for i, terms in enumerate(self._mul_terms):
            v = (X[..., i] + Y[..., i]) % p
            for j1, j2 in terms:
                v = (v + X[..., j1] * Y[..., j2] % p) % p
            out[..., i] = v
        return out

    def rank_rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        return X @ self._radix

    def unrank_rows(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.int64)
        out = np.empty(r.shape + (self.m,), dtype=np.int64)
        rest = r.copy()
        for i in range(self.m):
            rest, out[..., i] = np.divmod(rest, self.p)
        return out

    def all_entries(self) -> np.ndarray:
        """Entries of every element, shape (n, m), in rank order."""
        return self.unrank_rows(np.arange(self.n, dtype=np.int64))

    def _check(self, g: GroupElement) -> None:
        if g.group != self:
            raise ValueError(
                f"element of H_{{{g.group.p},{g.group.d}}} used in H_{{{self.p},{self.d}}}"
            )

    def __repr__(self) -> str:
        return f"HeisenbergGroup(p={self.p}, d={self.d})"


@dataclass(frozen=True)
class GroupElement:
    group: HeisenbergGroup = field(repr=False)
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.group.m:
            raise ValueError(
                f"expected {self.group.m} entries, got {len(self.entries)}"
            )
        p = self.group.p
        if any(not 0 <= e < p for e in self.entries):
            raise ValueError(f"entries must lie in [0, {p}): {self.entries}")

    def __mul__(self, other: GroupElement) -> GroupElement:
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.group != self.group:
            raise ValueError("cannot multiply elements of different groups")
        return self.group.mul(self, other)

    def __pow__(self, e: int) -> GroupElement:
        return self.group.power(self, e)

    def inverse(self) -> GroupElement:
        return self.group.inv(self)

    def is_identity(self) -> bool:
        return not any(self.entries)

    def __getitem__(self, pos: tuple[int, int]) -> int:
        """Matrix entry at 1-based position (a, b)."""
        a, b = pos
        if a == b:
            return 1
        if b < a:
            return 0
        return self.entries[self.group.index[a - 1, b - 1]]


# -- module level conveniences ------------------------------------------------


def _same_group(g: GroupElement, h: GroupElement) -> HeisenbergGroup:
    if g.group != h.group:
        raise ValueError("parameter mismatch between operands")
    return g.group


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    return _same_group(g, h).mul(g, h)


def inv(g: GroupElement) -> GroupElement:
    return g.group.inv(g)


def abelianize(g: GroupElement) -> tuple[int, ...]:
    return g.group.abelianize(g)


def in_commutator(g: GroupElement) -> bool:
    return g.group.in_commutator(g)


def rank(g: GroupElement) -> int:
    return g.group.rank(g)


def unrank(group: HeisenbergGroup, r: int) -> GroupElement:
    return group.unrank(r)


def commutator(x: GroupElement, y: GroupElement) -> GroupElement:
    """[x, y] = x y x^{-1} y^{-1}, so that h g = g h [h^{-1}, g^{-1}]."""
    return x * y * x.inverse() * y.inverse()


def _check_word(word: Sequence[int], k: int) -> np.ndarray:
    w = np.asarray(word, dtype=np.int64).reshape(-1)
    if w.size and (w.min() < 0 or w.max() >= k):
        raise ValueError(f"word letters must lie in [0, {k})")
    return w


def word_product(generators: Sequence[GroupElement], word: Sequence[int]) -> GroupElement:
    """Left-to-right product Z_{w_1} Z_{w_2} ... of the indicated generators.

    ``generators`` may be a :class:`~heisenwalk.walk.GeneratorSet` or any
    sequence of elements.  The empty word gives the identity.
    """
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator")
    group = gens[0].group
    letters = _check_word(word, len(gens))
    out = group.identity()
    for i in letters:
        out = group.mul(out, gens[i])
    return out


@dataclass(frozen=True)
class WordStats:
    """Ordered pair counts and occupancy of a word.

    ``c[i, j]`` is the number of position pairs m < l with letter i at m and
    letter j at l (i strictly earlier); the diagonal is zeroed.  ``w[i]``
    counts occurrences of letter i.
    """

    c: np.ndarray
    w: np.ndarray

    @property
    def length(self) -> int:
        return int(self.w.sum())

    def __eq__(self, other):
        if not isinstance(other, WordStats):
            return NotImplemented
        return np.array_equal(self.c, other.c) and np.array_equal(self.w, other.w)

    __hash__ = None


def word_stats(word: Sequence[int], k: int) -> WordStats:
    letters = _check_word(word, k)
    c = np.zeros((k, k), dtype=np.int64)
    seen = np.zeros(k, dtype=np.int64)
    for j in letters:
        c[:, j] += seen
        seen[j] += 1
    np.fill_diagonal(c, 0)
    return WordStats(c=c, w=seen)


def f_poly(a: Sequence[int], b: Sequence[int], p: int) -> int:
    """Corner polynomial sum_s b_s sum_{r<s} a_r, reduced mod p."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    total, prefix = 0, 0
    for a_s, b_s in zip(a, b):
        total += int(b_s) * prefix
        prefix += int(a_s)
    return total % p


def d3_product_formula(generators: Sequence[GroupElement], word: Sequence[int]) -> GroupElement:
    """Product of a word in H_{p,3} via (sum a, sum b, sum c + f(a, b))."""
    gens = list(generators)
    group = gens[0].group
    if group.d != 3:
        raise ValueError("the closed product formula is for d = 3")
    letters = _check_word(word, len(gens))
    a = [gens[i].entries[0] for i in letters]
    b = [gens[i].entries[1] for i in letters]
    c = [gens[i].entries[2] for i in letters]
    p = group.p
    return group.element((sum(a) % p, sum(b) % p, (sum(c) + f_poly(a, b, p)) % p))


def step2_decomposition(
    generators: Sequence[GroupElement],
    word: Sequence[int],
    *,
    transpose: bool = False,
) -> GroupElement:
    """Rebuild a word product in H_{p,3} from its occupancy and pair counts.

    Returns prod_i Z_i^{w_i} (ascending i) times
    prod_{i<j} [Z_i^{-1}, Z_j^{-1}]^{-x_ij}, where x_ij = c[j, i] counts the
    occurrences of Z_j before an occurrence of Z_i.  ``transpose=True`` uses
    c[i, j] instead, which is wrong in general; it exists for mutation tests.
    """
    gens = list(generators)
    group = gens[0].group
    if group.d != 3:
        raise ValueError("the step-2 decomposition is exact only for d = 3")
    k = len(gens)
    stats = word_stats(word, k)
    out = group.identity()
    for i in range(k):
        out = out * gens[i] ** int(stats.w[i])
    for i in range(k):
        for j in range(i + 1, k):
            x = stats.c[i, j] if transpose else stats.c[j, i]
            if x:
                out = out * commutator(gens[i].inverse(), gens[j].inverse()) ** (-int(x))
    return out


def step2_decomposition_check(
    generators: Sequence[GroupElement],
    word: Sequence[int],
    *,
    transpose: bool = False,
) -> bool:
    return step2_decomposition(generators, word, transpose=transpose) == word_product(
        generators, word
    )
