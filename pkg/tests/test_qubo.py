import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import weighted_graphs
from oracles import best_modularity, ising_energy, k_concurrent_energy, qubo_min
from qubocd.graph_io import Graph
from qubocd.modularity import modularity_matrix, modularity_score
from qubocd.qubo import (
    IsingModel,
    PenaltyConfig,
    Qubo,
    QuboFormatError,
    decode_labeling,
    default_gamma,
    dumps_qubo,
    ising_from_qubo,
    k_concurrent_qubo,
    loads_qubo,
    one_hot_violations,
    qubo_from_ising,
    two_community_qubo,
    var_index,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def qubos(draw, max_vars=8):
    n = draw(st.integers(1, max_vars))
    linear = draw(st.lists(finite, min_size=n, max_size=n))
    pairs = [p for p in itertools.combinations(range(n), 2) if draw(st.booleans())]
    values = [draw(finite) for _ in pairs]
    offset = draw(finite)
    return Qubo(linear, [i for i, _ in pairs], [j for _, j in pairs], values, offset)


def bits_for(n):
    return hnp.arrays(np.int8, n, elements=st.integers(0, 1))


def test_coupling_normalization_merges_and_orients():
    q = Qubo([0.0, 0.0, 0.0], [1, 0, 2], [0, 1, 0], [1.0, 2.0, 0.0])
    assert q.quadratic == {(0, 1): 3.0}
    with pytest.raises(ValueError):
        Qubo([0.0, 0.0], [0], [0], [1.0])
    with pytest.raises(ValueError):
        Qubo([0.0, 0.0], [0], [2], [1.0])


def test_energy_rejects_non_binary():
    q = Qubo.from_dict([1.0, 2.0], {(0, 1): -1.0})
    assert q.energy([1, 1]) == 2.0
    with pytest.raises(ValueError):
        q.energy([2, 0])
    with pytest.raises(ValueError):
        ising_from_qubo(q).energy([0, 1])


def test_batch_energy_matches_single():
    q = Qubo.from_dict([1.0, -2.0, 0.5], {(0, 2): 3.0, (1, 2): -1.0}, 0.25)
    xs = np.array(list(itertools.product((0, 1), repeat=3)))
    assert np.array_equal(q.energy(xs), [q.energy(x) for x in xs])


@settings(max_examples=1000, deadline=None)
@given(qubos(), st.data())
def test_qubo_ising_energy_equality(q, data):
    x = data.draw(bits_for(q.num_vars))
    m = ising_from_qubo(q)
    s = 2 * x.astype(int) - 1
    assert m.energy(s) == pytest.approx(q.energy(x), abs=1e-9)
    assert ising_energy(m.h, m.J, m.offset, s) == pytest.approx(q.energy(x), abs=1e-9)
    back = qubo_from_ising(m)
    assert back.energy(x) == pytest.approx(q.energy(x), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(qubos(max_vars=6), st.data())
def test_flip_deltas(q, data):
    x = data.draw(bits_for(q.num_vars))
    deltas = q.flip_deltas(x)
    for i in range(q.num_vars):
        y = x.copy()
        y[i] ^= 1
        assert deltas[i] == pytest.approx(q.energy(y) - q.energy(x), abs=1e-9)


def test_ising_from_dict():
    m = IsingModel.from_dict([1.0, -1.0], {(0, 1): 0.5})
    assert m.energy([1, -1]) == pytest.approx(1.0 + 1.0 - 0.5)


@settings(max_examples=200, deadline=None)
@given(weighted_graphs(max_nodes=9), st.data())
def test_two_community_energy_is_minus_modularity(g, data):
    x = data.draw(bits_for(g.n))
    bm = modularity_matrix(g)
    assert -two_community_qubo(bm).energy(x) == pytest.approx(modularity_score(bm, x), abs=1e-12)


def test_two_community_ground_state_zachary(zachary):
    from qubocd.solvers import SolverParams, sa_sample

    bm = modularity_matrix(zachary)
    ss = sa_sample(two_community_qubo(bm), SolverParams(seed=1, num_reads=20, sweeps=500))
    # best bisection of Zachary, matching the thresholded rows at large t
    assert -ss.energies[0] == pytest.approx(0.3717948717948718, abs=1e-12)


def test_var_index_layout():
    assert var_index(3, 0, 10) == 3
    assert var_index(3, 2, 10) == 23


def test_k_concurrent_size_and_budget(zachary):
    bm = modularity_matrix(zachary)
    q = k_concurrent_qubo(bm, 4)
    assert q.num_vars == 136
    with pytest.raises(ValueError, match="k must be"):
        k_concurrent_qubo(bm, 1)
    with pytest.raises(ValueError, match="hybrid_solve"):
        k_concurrent_qubo(bm, 16, max_vars=500)


@settings(max_examples=1000, deadline=None)
@given(weighted_graphs(max_nodes=6), st.integers(2, 3), st.floats(0.1, 3.0), st.data())
def test_k_concurrent_matches_definitional_energy(g, k, beta, data):
    bm = modularity_matrix(g)
    gamma = data.draw(st.lists(st.floats(0.01, 2.0), min_size=g.n, max_size=g.n))
    q = k_concurrent_qubo(bm, k, PenaltyConfig(gamma, beta))
    x = data.draw(bits_for(g.n * k))
    expected = k_concurrent_energy(bm.B, bm.two_m, k, x, gamma, beta)
    assert q.energy(x) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(weighted_graphs(max_nodes=8), st.integers(2, 4), st.floats(0.1, 3.0), st.data())
def test_feasible_energy_is_minus_beta_modularity(g, k, beta, data):
    bm = modularity_matrix(g)
    labels = data.draw(st.lists(st.integers(0, k - 1), min_size=g.n, max_size=g.n))
    x = np.zeros(g.n * k, dtype=np.int8)
    for node, c in enumerate(labels):
        x[var_index(node, c, g.n)] = 1
    q = k_concurrent_qubo(bm, k, PenaltyConfig(beta=beta))
    assert -q.energy(x) / beta == pytest.approx(modularity_score(bm, labels), abs=1e-12)
    assert one_hot_violations(x, g.n, k) == 0
    lab = decode_labeling(x, g.n, k, bm)
    assert lab.repairs == 0
    assert lab.score == pytest.approx(modularity_score(bm, labels), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(weighted_graphs(min_nodes=3, max_nodes=5), st.integers(2, 3))
def test_default_gamma_makes_ground_state_feasible(g, k):
    bm = modularity_matrix(g)
    q = k_concurrent_qubo(bm, k)
    ground = qubo_min(q.linear, q.quadratic, q.offset)
    assert -ground == pytest.approx(best_modularity(g.adjacency(), k)[0], abs=1e-9)


def test_default_gamma_value(zachary):
    bm = modularity_matrix(zachary)
    gamma = default_gamma(bm)
    assert np.all(gamma == gamma[0])
    assert gamma[0] == pytest.approx(1.1 * np.abs(bm.B).sum(axis=1).max() / 156)


def test_penalty_config_validation(zachary):
    bm = modularity_matrix(zachary)
    with pytest.raises(ValueError):
        PenaltyConfig(gamma=-1.0)
    with pytest.raises(ValueError):
        PenaltyConfig(beta=0.0)
    with pytest.raises(ValueError):
        PenaltyConfig(gamma=[1.0, 2.0]).gamma_vector(bm)
    doubled = PenaltyConfig(gamma=0.5).scaled(2.0, bm)
    assert np.allclose(doubled.gamma_vector(bm), 1.0)


def test_decode_repairs_by_largest_gain():
    # two triangles joined by one edge; node 5 selects no community
    g = Graph(6, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)))
    bm = modularity_matrix(g)
    n, k = 6, 2
    x = np.zeros(n * k, dtype=np.int8)
    for node, c in enumerate([0, 0, 0, 1, 1]):
        x[var_index(node, c, n)] = 1
    assert one_hot_violations(x, n, k) == 1
    lab = decode_labeling(x, n, k, bm)
    assert lab.labels == (0, 0, 0, 1, 1, 1)
    assert lab.repairs == 1
    # node 0 in both communities: it joins its triangle
    x[var_index(0, 1, n)] = 1
    lab = decode_labeling(x, n, k, bm)
    assert lab.labels[:3] == (0, 0, 0) and lab.repairs == 2


def test_decode_canonical_and_length_checks(zachary):
    bm = modularity_matrix(zachary)
    x = np.zeros(34 * 3, dtype=np.int8)
    x[var_index(0, 2, 34)] = 1
    x[np.arange(1, 34)] = 1
    lab = decode_labeling(x, 34, 3, bm)
    assert lab.labels[0] == 0 and lab.k_used == 2
    with pytest.raises(ValueError):
        decode_labeling(x[:-1], 34, 3, bm)


@settings(max_examples=200, deadline=None)
@given(qubos())
def test_text_format_round_trip(q):
    back = loads_qubo(dumps_qubo(q))
    assert np.array_equal(back.linear, q.linear)
    assert back.quadratic == q.quadratic
    assert back.offset == q.offset


def test_text_format_header_and_errors():
    q = Qubo.from_dict([1.0, 0.0, -2.0], {(0, 1): 0.5})
    text = dumps_qubo(q)
    assert "p qubo 0 3 2 1" in text
    with pytest.raises(QuboFormatError, match="announces"):
        loads_qubo("p qubo 0 3 2 1\n0 0 1\n")
    with pytest.raises(QuboFormatError):
        loads_qubo("0 0 1\n")
    with pytest.raises(QuboFormatError):
        loads_qubo("p qubo 0 2 1 0\n5 5 1\n")
    with pytest.raises(QuboFormatError):
        loads_qubo("c nothing\n")
