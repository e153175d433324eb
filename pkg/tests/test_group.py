import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenwalk import (
    HeisenbergGroup,
    abelianize,
    commutator,
    d3_product_formula,
    f_poly,
    in_commutator,
    inv,
    mul,
    rank,
    step2_decomposition,
    step2_decomposition_check,
    unrank,
    word_product,
    word_stats,
)
from heisenwalk.walk import GeneratorSet, sample_generators


def dense_mul(G, g, h):
    """Oracle: multiply the full d x d matrices mod p."""
    return G.from_matrix((G.to_matrix(g) @ G.to_matrix(h)) % G.p)


SMALL = [(2, 3), (3, 3), (5, 3), (2, 4), (3, 4)]


def test_order_and_layout():
    G = HeisenbergGroup(5, 3)
    assert G.n == 125 and G.abelian_order == 25 and G.commutator_order == 5
    # super-diagonal first, then the next diagonal
    assert G.positions == ((0, 1), (1, 2), (0, 2))
    assert HeisenbergGroup(3, 4).n == 3**6


@pytest.mark.parametrize("p,d", [(4, 3), (1, 3), (5, 2), (2**31 + 11, 3)])
def test_rejects_bad_parameters(p, d):
    with pytest.raises(ValueError):
        HeisenbergGroup(p, d)


def test_mul_example():
    G = HeisenbergGroup(5, 3)
    g, h = G.element((1, 2, 3)), G.element((4, 0, 1))
    assert mul(g, h).entries == (0, 2, 4)
    assert dense_mul(G, g, h).entries == (0, 2, 4)
    assert g * G.identity() == g


def test_inv_example():
    G = HeisenbergGroup(5, 3)
    g = G.element((1, 2, 3))
    assert inv(g).entries == (4, 3, 4)
    assert dense_mul(G, g, inv(g)).is_identity()
    assert inv(G.identity()) == G.identity()


def test_abelianize_and_commutator_membership():
    G = HeisenbergGroup(5, 3)
    assert abelianize(G.element((1, 2, 3))) == (1, 2)
    assert abelianize(G.identity()) == (0, 0)
    assert in_commutator(G.identity())
    assert in_commutator(G.element((0, 0, 4)))
    assert not in_commutator(G.element((1, 0, 0)))
    rng = np.random.default_rng(5)
    for p, d in [(5, 3), (3, 4), (7, 5)]:
        H = HeisenbergGroup(p, d)
        for _ in range(1000 if (p, d) == (5, 3) else 100):
            x, y = H.random_element(rng), H.random_element(rng)
            assert in_commutator(commutator(x, y))


@pytest.mark.parametrize("p,d", SMALL)
def test_mul_matches_dense_matrices_exhaustively_on_pairs(p, d):
    G = HeisenbergGroup(p, d)
    elems = list(G.elements())
    rng = np.random.default_rng(p * 10 + d)
    idx = rng.integers(0, len(elems), size=(300, 2))
    for i, j in idx:
        assert elems[i] * elems[j] == dense_mul(G, elems[i], elems[j])


@pytest.mark.parametrize("p,d", SMALL)
def test_rank_unrank_bijection(p, d):
    G = HeisenbergGroup(p, d)
    ranks = [rank(g) for g in G.elements()]
    assert sorted(ranks) == list(range(G.n))
    assert all(unrank(G, r).entries == G.unrank(r).entries for r in range(G.n))
    assert rank(G.identity()) == 0
    X = G.all_entries()
    assert np.array_equal(G.rank_rows(X), np.arange(G.n))
    assert np.array_equal(G.unrank_rows(np.arange(G.n)), X)


def test_rank_digit_order_p2():
    G = HeisenbergGroup(2, 3)
    # entry (1,2) is the least significant digit, then (2,3), then (1,3)
    assert rank(G.element((1, 0, 0))) == 1
    assert rank(G.element((0, 1, 0))) == 2
    assert rank(G.element((0, 0, 1))) == 4
    with pytest.raises(ValueError):
        G.unrank(8)


def test_abelian_rank_is_low_digits():
    G = HeisenbergGroup(3, 4)
    for g in itertools.islice(G.elements(), 0, G.n, 37):
        a = abelianize(g)
        assert rank(g) % G.abelian_order == sum(x * 3**i for i, x in enumerate(a))


def test_mul_rows_matches_scalar():
    G = HeisenbergGroup(7, 4)
    rng = np.random.default_rng(0)
    X = rng.integers(0, 7, size=(50, G.m))
    Y = rng.integers(0, 7, size=(50, G.m))
    Z = G.mul_rows(X, Y)
    for x, y, z in zip(X, Y, Z):
        assert (G.element(x) * G.element(y)).entries == tuple(z)


@settings(max_examples=60, deadline=None)
@given(
    pd=st.sampled_from([(2, 3), (3, 3), (5, 3), (7, 3), (2, 4), (3, 4), (5, 5), (101, 3)]),
    data=st.data(),
)
def test_group_axioms_property(pd, data):
    p, d = pd
    G = HeisenbergGroup(p, d)
    ent = st.lists(st.integers(0, p - 1), min_size=G.m, max_size=G.m)
    x, y, z = (G.element(data.draw(ent)) for _ in range(3))
    assert (x * y) * z == x * (y * z)
    assert (x * x.inverse()).is_identity() and (x.inverse() * x).is_identity()
    assert x * G.identity() == x == G.identity() * x
    assert G.power(x, -3) == (x * x * x).inverse()


def test_word_product_examples():
    G = HeisenbergGroup(5, 3)
    Z = GeneratorSet.from_entries(G, [(1, 2, 0), (3, 2, 4)])
    assert word_product(Z, []).is_identity()
    assert word_product(Z, [0]) == Z[0]
    expected = dense_mul(G, dense_mul(G, Z[0], Z[1]), Z[0])
    assert word_product(Z, [0, 1, 0]) == expected == mul(mul(Z[0], Z[1]), Z[0])
    with pytest.raises(ValueError):
        word_product(Z, [2])


def brute_pairs(word, k):
    c = np.zeros((k, k), dtype=int)
    for m in range(len(word)):
        for l in range(m + 1, len(word)):
            if word[m] != word[l]:
                c[word[m], word[l]] += 1
    return c


def test_word_stats_examples():
    # 1-based word (1,2,1,2)
    s = word_stats([0, 1, 0, 1], 2)
    assert s.c[0, 1] == 3 and s.c[1, 0] == 1
    assert tuple(s.w) == (2, 2)
    assert not word_stats([2, 2, 2], 3).c.any()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=25))
def test_word_stats_matches_double_loop(word):
    s = word_stats(word, 5)
    assert np.array_equal(s.c, brute_pairs(word, 5))
    assert np.array_equal(s.w, np.bincount(np.array(word, dtype=int), minlength=5))
    # every unordered pair of distinct positions is counted once
    assert s.c.sum() + sum(x * (x - 1) // 2 for x in s.w) == len(word) * (len(word) - 1) // 2


def test_f_poly():
    assert f_poly((1, 0, 1), (0, 1, 1), 7) == 2
    assert f_poly((3, 4, 5), (0, 0, 0), 7) == 0
    with pytest.raises(ValueError):
        f_poly((1,), (1, 2), 7)


def test_d3_product_formula_random_words():
    G = HeisenbergGroup(7, 3)
    rng = np.random.default_rng(11)
    for _ in range(300):
        k = int(rng.integers(1, 6))
        Z = sample_generators(G, k, rng)
        word = rng.integers(0, k, size=int(rng.integers(0, 51)))
        assert word_product(Z, word) == d3_product_formula(Z, word)


def test_step2_examples():
    G = HeisenbergGroup(5, 3)
    Z = GeneratorSet.from_entries(G, [(1, 2, 0), (3, 2, 4), (2, 4, 1)])
    assert step2_decomposition_check(Z, [0, 1])
    # Z_2 Z_1 = Z_1 Z_2 [Z_1^{-1}, Z_2^{-1}]^{-1}
    lhs = Z[1] * Z[0]
    rhs = Z[0] * Z[1] * commutator(Z[0].inverse(), Z[1].inverse()) ** -1
    assert lhs == rhs == step2_decomposition(Z, [1, 0])
    assert step2_decomposition(Z, [2]) == Z[2]


def test_step2_exhaustive_short_words():
    G = HeisenbergGroup(5, 3)
    Z = GeneratorSet.from_entries(G, [(1, 2, 0), (3, 2, 4), (2, 4, 1)])
    for L in range(6):
        for word in itertools.product(range(3), repeat=L):
            assert step2_decomposition_check(Z, word)


def test_step2_transposed_convention_is_caught():
    G = HeisenbergGroup(5, 3)
    Z = GeneratorSet.from_entries(G, [(1, 2, 0), (3, 2, 4), (2, 4, 1)])
    assert not step2_decomposition_check(Z, [1, 0], transpose=True)


def test_step2_rejects_other_d():
    G = HeisenbergGroup(3, 4)
    Z = sample_generators(G, 2, 0)
    with pytest.raises(ValueError):
        step2_decomposition(Z, [0, 1])
