import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex
from oracles import betti_bruteforce
from pih.complex import FilteredComplex
from pih.datasets import circle_whisker_complex, wedge_spheres_complex
from pih.homology import (
    PersistenceDiagram,
    PersistencePair,
    betti_numbers,
    bottleneck_distance,
    compute_persistence,
    persistence_pairs,
    total_persistence,
    wasserstein_distance,
)


def diagram(points, dim=0):
    return PersistenceDiagram(dim, [PersistencePair(dim, float(b), float(d)) for b, d in points])


def test_single_vertex():
    (d0,) = compute_persistence(FilteredComplex([(0,)], [0.0]))
    assert d0.multiset() == [(0.0, math.inf)]


def test_triangle_boundary_is_a_circle():
    K = FilteredComplex.from_simplices([(0, 1), (1, 2), (0, 2)])
    assert betti_numbers(compute_persistence(K)) == [1, 1]


def test_circle_whisker_ph():
    assert betti_numbers(compute_persistence(circle_whisker_complex())) == [1, 1]


def test_wedge_of_spheres_ph():
    assert betti_numbers(compute_persistence(wedge_spheres_complex())) == [1, 0, 2]


def test_empty_and_disjoint():
    assert betti_numbers(compute_persistence(FilteredComplex([], []))) == [0]
    assert betti_numbers(compute_persistence(FilteredComplex([(0,), (1,)], [0, 0]))) == [2]


def test_betti_at_finite_value():
    K = FilteredComplex.from_simplices([(0, 1), (1, 2), (0, 2)])
    dg = compute_persistence(K)
    assert betti_numbers(dg, at=0) == [3, 0]
    assert betti_numbers(dg, at=1) == [1, 1]
    with pytest.raises(ValueError):
        betti_numbers(dg, at="never")


def test_reduction_matches_rank_oracle(gen):
    # every dimension, at infinity and at every filtration value
    for _ in range(120):
        K = random_complex(gen)
        top = K.dimension
        dg = compute_persistence(K, top)
        assert betti_numbers(dg) == betti_bruteforce(K.simplices, top)
        for t in np.unique(K.values):
            sub = [s for s, v in zip(K.simplices, K.values) if v <= t]
            assert betti_numbers(dg, at=t) == betti_bruteforce(sub, top)


def test_pair_count_conservation(gen):
    for _ in range(50):
        K = random_complex(gen)
        dg = compute_persistence(K, K.dimension, keep_zero=True)
        n_pairs = sum(len(d.finite) for d in dg)
        n_ess = sum(len(d.essential) for d in dg)
        assert 2 * n_pairs + n_ess == len(K)


def test_clearing_gives_textbook_pairs(gen):
    for _ in range(50):
        K = random_complex(gen)
        assert sorted(persistence_pairs(K, clearing=True)) == sorted(persistence_pairs(K, clearing=False))


def test_zero_persistence_hidden_by_default():
    K = FilteredComplex([(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)], [0] * 7)
    hidden = compute_persistence(K)
    shown = compute_persistence(K, keep_zero=True)
    assert sum(len(d) for d in hidden) < sum(len(d) for d in shown)
    assert all(p.death > p.birth for d in hidden for p in d)


def test_stability_under_perturbation(gen):
    for _ in range(30):
        K = random_complex(gen)
        delta = 0.25
        noisy = K.values + gen.uniform(-delta, delta, len(K))
        value = {}
        for s, v in zip(K.simplices, noisy):
            value[s] = max([v] + [value[f] for f in itertools.combinations(s, len(s) - 1) if f])
        L = FilteredComplex(K.simplices, [value[s] for s in K.simplices])
        for a, b in zip(compute_persistence(K, K.dimension), compute_persistence(L, K.dimension)):
            assert bottleneck_distance(a, b) <= delta + 1e-12


def test_total_persistence_examples():
    assert total_persistence(diagram([])) == 0
    assert total_persistence(diagram([(0, 1), (0, 2)]), 1) == 3
    assert total_persistence(diagram([(0, 1), (0, 2)]), 2) == 5
    assert total_persistence(diagram([(0, 1), (0, math.inf)]), 1) == 1
    with pytest.raises(ValueError):
        total_persistence(diagram([]), 0.5)


def test_wasserstein_examples():
    a = diagram([(0, 2), (1, 3)])
    assert wasserstein_distance(a, a) == 0
    assert wasserstein_distance(diagram([(0, 2)]), diagram([]), q=1) == pytest.approx(1)
    assert wasserstein_distance(a, diagram([(0, 2)]), q=1) == pytest.approx(1)
    with pytest.raises(ValueError):
        wasserstein_distance(a, a, q=0.5)


def test_wasserstein_essential_classes():
    a = diagram([(0, math.inf), (0, 1)])
    b = diagram([(0, 1)])
    assert wasserstein_distance(a, b) == math.inf
    assert wasserstein_distance(a, b, finite_only=True) == 0
    c = diagram([(0.5, math.inf), (0, 1)])
    assert wasserstein_distance(a, c, q=1) == pytest.approx(0.5)


def _wasserstein_bruteforce(A, B, q):
    """Minimum over all partial matchings; unmatched points go to the diagonal."""
    best = math.inf
    m, n = len(A), len(B)
    for k in range(min(m, n) + 1):
        for left in itertools.combinations(range(m), k):
            for right in itertools.permutations(range(n), k):
                cost = 0.0
                for i, j in zip(left, right):
                    cost += max(abs(A[i][0] - B[j][0]), abs(A[i][1] - B[j][1])) ** q
                cost += sum(((A[i][1] - A[i][0]) / 2) ** q for i in range(m) if i not in left)
                cost += sum(((B[j][1] - B[j][0]) / 2) ** q for j in range(n) if j not in right)
                best = min(best, cost)
    return best ** (1 / q)


points = st.lists(
    st.tuples(st.floats(0, 5, allow_nan=False), st.floats(0, 3, allow_nan=False)).map(lambda t: (t[0], t[0] + t[1])),
    max_size=4,
)


@settings(max_examples=60, deadline=None)
@given(points, points, st.sampled_from([1.0, 2.0, 3.0]))
def test_wasserstein_matches_bruteforce(A, B, q):
    assert wasserstein_distance(diagram(A), diagram(B), q) == pytest.approx(_wasserstein_bruteforce(A, B, q), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(points, points, points, st.sampled_from([1.0, 2.0]))
def test_wasserstein_is_a_metric(A, B, C, q):
    a, b, c = diagram(A), diagram(B), diagram(C)
    ab = wasserstein_distance(a, b, q)
    assert ab == pytest.approx(wasserstein_distance(b, a, q), abs=1e-9)
    assert ab <= wasserstein_distance(a, c, q) + wasserstein_distance(c, b, q) + 1e-9


@settings(max_examples=40, deadline=None)
@given(points, points)
def test_bottleneck_below_wasserstein_one(A, B):
    a, b = diagram(A), diagram(B)
    bn = bottleneck_distance(a, b)
    assert bn <= wasserstein_distance(a, b, 1) + 1e-9
    assert bn == pytest.approx(_wasserstein_bruteforce_inf(A, B), abs=1e-9)


def _wasserstein_bruteforce_inf(A, B):
    best = math.inf
    m, n = len(A), len(B)
    for k in range(min(m, n) + 1):
        for left in itertools.combinations(range(m), k):
            for right in itertools.permutations(range(n), k):
                costs = [max(abs(A[i][0] - B[j][0]), abs(A[i][1] - B[j][1])) for i, j in zip(left, right)]
                costs += [(A[i][1] - A[i][0]) / 2 for i in range(m) if i not in left]
                costs += [(B[j][1] - B[j][0]) / 2 for j in range(n) if j not in right]
                best = min(best, max(costs, default=0.0))
    return best


def test_pair_validation():
    with pytest.raises(ValueError):
        PersistencePair(0, 2.0, 1.0)
    with pytest.raises(ValueError):
        PersistenceDiagram(1, [PersistencePair(0, 0.0, 1.0)])
