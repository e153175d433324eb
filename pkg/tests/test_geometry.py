import itertools
import math
from collections import Counter, deque

import numpy as np
import pytest
from scipy import stats

from heisenwalk import HeisenbergGroup, word_product
from heisenwalk.geometry import (
    DistanceHistogram,
    abelian_bfs_distances,
    ball_size,
    ball_word_distribution,
    bfs_distances,
    counting_bound_check,
    default_omega,
    lattice_ball_points,
    m_k,
    m_star,
    random_order_word,
    sample_uniform_ball,
    typical_distance,
    unrank_ball_point,
)
from heisenwalk.walk import GeneratorSet, l2_collision, project, sample_generators


def deque_bfs(Z):
    """Oracle: textbook BFS over GroupElement objects."""
    G = Z.group
    dist = {G.identity(): 0}
    queue = deque([G.identity()])
    while queue:
        g = queue.popleft()
        for z in Z:
            h = g * z
            if h not in dist:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


def test_ball_size_examples_and_enumeration():
    assert ball_size(2, 3) == 10
    assert ball_size(3, 0) == 1
    assert ball_size(2, 3.7) == 10
    for k in range(1, 5):
        for R in range(13):
            brute = sum(1 for x in itertools.product(range(R + 1), repeat=k) if sum(x) <= R)
            assert ball_size(k, R) == brute
    assert ball_size(50, 10**6) == math.comb(10**6 + 50, 50)
    with pytest.raises(ValueError):
        ball_size(0, 3)


def test_m_star():
    assert m_star(2, 5, 3) == pytest.approx(10 / math.e)
    assert m_star(3, 7, 4) == pytest.approx(3 * 7 / math.e)
    assert m_star(3, 11, 4) > m_star(3, 7, 4)


def test_m_k_examples_and_minimality():
    assert m_k(1, 5, 3, omega=0) == 24
    for k, p, d in [(2, 5, 3), (3, 11, 3), (4, 101, 4), (5, 7, 6)]:
        for omega in (0.0, None, 2.5):
            w = default_omega(k, p, d) if omega is None else omega
            R = m_k(k, p, d, omega)
            target = math.exp(w) * p ** (d - 1)
            assert ball_size(k, R) >= target * (1 - 1e-12)
            assert R == 0 or ball_size(k, R - 1) < target
    assert default_omega(2, 5, 3) == 1.0


def test_unranking_is_a_bijection():
    for k, R in [(1, 4), (2, 3), (3, 4), (4, 2)]:
        pts = lattice_ball_points(k, R)
        assert len(set(pts)) == ball_size(k, R)
        assert all(sum(x) <= R and min(x) >= 0 for x in pts)
    with pytest.raises(ValueError):
        unrank_ball_point(2, 2, 6)


@pytest.mark.parametrize("k,R", [(1, 2), (2, 2), (3, 4)])
def test_uniform_ball_sampler_chi_square(k, R):
    draws = sample_uniform_ball(k, R, seed=k * 100 + R, size=10_000)
    assert (draws.sum(axis=1) <= R).all()
    counts = Counter(map(tuple, draws))
    pts = lattice_ball_points(k, R)
    obs = [counts[p] for p in pts]
    assert stats.chisquare(obs).pvalue >= 0.01


def test_sampler_origin_and_huge_balls():
    assert sample_uniform_ball(3, 0, seed=1).tolist() == [0, 0, 0]
    x = sample_uniform_ball(40, 10**5, seed=2)
    assert x.sum() <= 10**5 and x.shape == (40,)


def test_random_order_word():
    assert random_order_word([0, 3, 0], seed=0).tolist() == [1, 1, 1]
    A = [2, 0, 3, 1]
    w = random_order_word(A, seed=5)
    assert np.bincount(w, minlength=4).tolist() == A
    first = [random_order_word([1, 1], seed=s)[0] for s in range(4000)]
    assert abs(np.mean(first) - 0.5) < 3 * 0.5 / math.sqrt(4000)


def test_bfs_degenerate_cases():
    G = HeisenbergGroup(2, 3)
    hist = bfs_distances(GeneratorSet(G, (G.identity(),)))
    assert hist.counts == {0: 1} and hist.unreachable == 7
    full = bfs_distances(GeneratorSet(G, tuple(G.elements())))
    assert full.counts == {0: 1, 1: 7}
    assert typical_distance(full, 0.5) == 1
    assert typical_distance(full, 1 / 8) == 0
    with pytest.raises(ValueError, match="7 unreachable"):
        typical_distance(hist, 0.5)


@pytest.mark.parametrize("p,k,seed", [(2, 2, 0), (2, 3, 1), (3, 3, 2), (5, 2, 3), (5, 4, 4)])
def test_bfs_matches_oracle(p, k, seed):
    Z = sample_generators(HeisenbergGroup(p, 3), k, seed)
    hist = bfs_distances(Z)
    oracle = deque_bfs(Z)
    assert sum(hist.counts.values()) + hist.unreachable == Z.group.n
    assert hist.counts[0] == 1
    assert hist.counts == dict(Counter(oracle.values()))
    G = Z.group
    for g, dd in oracle.items():
        assert hist.distances[G.rank(g)] == dd
    # triangle consistency along every edge
    for g, dd in oracle.items():
        for z in Z:
            assert oracle[g * z] <= dd + 1


def test_typical_distance_monotone_in_beta():
    Z = sample_generators(HeisenbergGroup(5, 3), 4, 9)
    hist = bfs_distances(Z)
    betas = np.linspace(0.01, 0.99, 50)
    D = [typical_distance(hist, b) for b in betas]
    assert all(np.diff(D) >= 0)
    with pytest.raises(ValueError):
        typical_distance(hist, 1.0)


def test_histogram_csv_round_trip():
    Z = sample_generators(HeisenbergGroup(3, 3), 3, 1)
    hist = bfs_distances(Z)
    text = hist.to_csv()
    assert text.splitlines()[0] == "distance,count"
    back = DistanceHistogram.from_csv(text, hist.n)
    assert back.counts == hist.counts and back.unreachable == hist.unreachable


@pytest.mark.parametrize("seed", range(5))
def test_counting_bound_on_h33(seed):
    Z = sample_generators(HeisenbergGroup(3, 3), 3, seed)
    rows = counting_bound_check(Z)
    assert rows[0].ball == 1
    assert all(r.ok for r in rows)
    ab = abelian_bfs_distances(Z)
    for r in rows:
        assert r.abelian_ball == sum(c for dd, c in ab.counts.items() if dd <= r.R)
        assert r.ball <= 3 * ball_size(3, r.R)


def test_ball_word_law_projection_contracts():
    G = HeisenbergGroup(3, 3)
    Z = sample_generators(G, 2, 6)
    mu = ball_word_distribution(Z, 3)
    assert mu.sum() == pytest.approx(1.0)
    # Monte-Carlo version of the same two-stage sampler
    rng = np.random.default_rng(0)
    hits = np.zeros(G.n)
    for _ in range(3000):
        A = sample_uniform_ball(2, 3, rng)
        hits[G.rank(word_product(Z, random_order_word(A, rng)))] += 1
    assert 0.5 * np.abs(hits / 3000 - mu).sum() < 0.08
    tv = 0.5 * np.abs(mu - 1 / G.n).sum()
    tva = 0.5 * np.abs(project(mu, G) - 1 / G.abelian_order).sum()
    assert tva <= tv + 1e-12
    assert l2_collision(project(mu, G)) >= 0
