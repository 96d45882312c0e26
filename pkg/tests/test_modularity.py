import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import weighted_graphs
from oracles import modularity_from_adjacency
from qubocd.graph_io import Graph
from qubocd.modularity import (
    canonicalize,
    make_labeling,
    matrix_to_csv,
    matrix_to_triples,
    modularity_matrix,
    modularity_score,
    threshold_matrix,
    two_community_score,
)

# Zachary optimum (four communities, Q = 0.4197896 as published for exact
# methods); networkx scores this labeling at 0.41978961209730437
ZACHARY_BEST = (
    0, 0, 0, 0, 1, 1, 1, 0, 2, 2, 1, 0, 0, 0, 2, 2, 1, 0, 2, 0, 2, 0, 2, 3, 3, 3, 2, 3, 3, 2, 2, 3, 2, 2,
)
ZACHARY_KEPT = {
    0.00: 561, 0.02: 544, 0.05: 411, 0.06: 334, 0.07: 300,
    0.08: 244, 0.10: 227, 0.15: 169, 0.25: 110,
}


def test_zachary_matrix_properties(zachary):
    bm = modularity_matrix(zachary)
    assert bm.two_m == 156.0
    assert np.allclose(bm.B, bm.B.T)
    assert np.abs(bm.B.sum(axis=1)).max() < 1e-10 * bm.two_m
    # B_00 = -16^2/156
    assert bm.B[0, 0] == pytest.approx(-256 / 156)
    assert not bm.B.flags.writeable


def test_zachary_optimum_score(zachary):
    bm = modularity_matrix(zachary)
    assert modularity_score(bm, ZACHARY_BEST) == pytest.approx(0.4197896120973044, abs=1e-12)
    assert make_labeling(bm, ZACHARY_BEST).k_used == 4


def test_single_community_scores_zero(zachary):
    bm = modularity_matrix(zachary)
    assert abs(modularity_score(bm, [0] * 34)) < 1e-12


def test_two_disjoint_triangles():
    g = Graph(6, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)))
    bm = modularity_matrix(g)
    assert modularity_score(bm, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5)
    assert two_community_score(bm, [1, 1, 1, -1, -1, -1]) == pytest.approx(0.5)


def test_k2_split_is_minus_half():
    bm = modularity_matrix(Graph(2, ((0, 1, 1.0),)))
    assert modularity_score(bm, [0, 1]) == pytest.approx(-0.5)


def test_empty_graph_is_rejected():
    with pytest.raises(ValueError, match="2m = 0"):
        modularity_matrix(Graph(3, ()))


def test_label_length_checked(zachary):
    bm = modularity_matrix(zachary)
    with pytest.raises(ValueError):
        modularity_score(bm, [0] * 33)
    with pytest.raises(ValueError):
        two_community_score(bm, [0] * 34)


@pytest.mark.parametrize("t, kept", sorted(ZACHARY_KEPT.items()))
def test_zachary_threshold_kept_pairs(zachary, t, kept):
    bm = modularity_matrix(zachary)
    thr, count = threshold_matrix(bm, t)
    assert count == kept
    assert thr.two_m == bm.two_m
    assert np.array_equal(np.diag(thr.B), np.diag(bm.B))


def test_threshold_above_every_entry_keeps_nothing(zachary):
    bm = modularity_matrix(zachary)
    thr, count = threshold_matrix(bm, 100.0)
    assert count == 0
    assert np.count_nonzero(thr.B - np.diag(np.diag(thr.B))) == 0
    with pytest.raises(ValueError):
        threshold_matrix(bm, -0.1)


def test_canonicalize_first_appearance():
    assert canonicalize([5, 5, 2, 7, 2]) == (0, 0, 1, 2, 1)
    assert canonicalize([]) == ()


def test_communities_groups(zachary):
    lab = make_labeling(modularity_matrix(zachary), ZACHARY_BEST)
    groups = lab.communities()
    assert sorted(sum(groups, [])) == list(range(34))
    assert groups[0][:4] == [0, 1, 2, 3]


def test_serializers_round_trip_exactly(zachary):
    bm = modularity_matrix(zachary)
    back = np.loadtxt(matrix_to_csv(bm).splitlines(), delimiter=",")
    assert np.array_equal(back, bm.B)
    lines = matrix_to_triples(bm).splitlines()
    assert lines[0] == "# n=34 two_m=156"
    i, j, v = lines[1].split()
    assert float(v) == bm.B[int(i), int(j)]


@settings(max_examples=200, deadline=None)
@given(weighted_graphs(max_nodes=12))
def test_row_sums_vanish(g):
    bm = modularity_matrix(g)
    assert np.abs(bm.B.sum(axis=1)).max() <= 1e-10 * bm.two_m


@settings(max_examples=150, deadline=None)
@given(weighted_graphs(max_nodes=9), st.data())
def test_score_matches_definition_and_networkx(g, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=g.n, max_size=g.n))
    bm = modularity_matrix(g)
    q = modularity_score(bm, labels)
    assert q == pytest.approx(modularity_from_adjacency(g.adjacency(), labels), abs=1e-12)
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_weighted_edges_from(g.edges)
    groups = [{i for i in range(g.n) if labels[i] == c} for c in set(labels)]
    assert q == pytest.approx(nx.community.modularity(G, groups, weight="weight"), abs=1e-12)
    assert -0.5 - 1e-12 <= q <= 1.0


@settings(max_examples=100, deadline=None)
@given(weighted_graphs(max_nodes=10), st.data())
def test_score_invariant_under_label_permutation(g, data):
    labels = np.array(data.draw(st.lists(st.integers(0, 4), min_size=g.n, max_size=g.n)))
    perm = np.array(data.draw(st.permutations(range(5))))
    bm = modularity_matrix(g)
    assert modularity_score(bm, perm[labels]) == modularity_score(bm, labels)
    assert modularity_score(bm, canonicalize(labels)) == modularity_score(bm, labels)


@settings(max_examples=100, deadline=None)
@given(weighted_graphs(max_nodes=10), st.floats(0, 1))
def test_threshold_count_is_monotone(g, t):
    bm = modularity_matrix(g)
    _, low = threshold_matrix(bm, t / 2)
    thr, high = threshold_matrix(bm, t)
    assert high <= low
    assert np.allclose(thr.B, thr.B.T)
