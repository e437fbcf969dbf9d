"""Structure queries and predicates of mixed graphs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ricf import CyclicGraphError, InvalidVertexError, MixedGraph


@st.composite
def mixed_graphs(draw, max_n=8, force_acyclic=False):
    n = draw(st.integers(min_value=2, max_value=max_n))
    directed = []
    bidirected = []
    for i in range(n):
        for j in range(i + 1, n):
            kind = draw(st.sampled_from(
                ["none", "none", "fwd", "bwd", "bi", "bow"]))
            if kind == "fwd":
                directed.append((i, j))
            elif kind == "bwd":
                directed.append((j, i) if not force_acyclic else (i, j))
            elif kind == "bi":
                bidirected.append((i, j))
            elif kind == "bow":
                directed.append((i, j))
                bidirected.append((i, j))
    return MixedGraph(n, directed=directed, bidirected=bidirected)


class TestConstruction:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            MixedGraph(2, directed=[(0, 0)])
        with pytest.raises(ValueError):
            MixedGraph(2, bidirected=[(1, 1)])

    def test_out_of_range_vertex(self):
        with pytest.raises(InvalidVertexError):
            MixedGraph(2, directed=[(0, 2)])

    def test_bidirected_stored_unordered(self):
        g1 = MixedGraph(3, bidirected=[(2, 0)])
        g2 = MixedGraph(3, bidirected=[(0, 2)])
        assert g1 == g2

    def test_duplicate_edges_collapse(self):
        g = MixedGraph(3, directed=[(0, 1), (0, 1)], bidirected=[(1, 2), (2, 1)])
        assert len(g.directed) == 1
        assert len(g.bidirected) == 1


class TestParentsSpouses:
    def test_quartet_parents(self, quartet):
        assert quartet.parents(2) == {0, 1}
        assert quartet.parents(0) == set()

    def test_sur_parents(self, sur_graph):
        assert sur_graph.parents(3) == {0, 1}

    def test_quartet_spouses(self, quartet):
        assert quartet.spouses(3) == {1}
        assert quartet.spouses(2) == set()

    def test_no_bidirected_edges(self):
        g = MixedGraph(3, directed=[(0, 1)])
        assert all(g.spouses(i) == set() for i in range(3))

    def test_unknown_vertex(self, quartet):
        with pytest.raises(InvalidVertexError):
            quartet.parents(7)
        with pytest.raises(InvalidVertexError):
            quartet.spouses(-1)


class TestAcyclic:
    def test_cycle_detected(self, chain4_cyclic):
        assert not chain4_cyclic.is_acyclic()

    def test_no_directed_edges(self):
        assert MixedGraph(4, bidirected=[(0, 1)]).is_acyclic()

    def test_quartet(self, quartet):
        assert quartet.is_acyclic()


class TestBowFree:
    def test_bow(self, chain4_bowed):
        assert not chain4_bowed.is_bow_free()

    def test_quartet(self, quartet):
        assert quartet.is_bow_free()

    def test_empty(self):
        assert MixedGraph(0).is_bow_free()


class TestAncestral:
    def test_quartet_not_ancestral(self, quartet):
        # 2 <-> 4 coexists with the path 2 -> 3 -> 4
        assert not quartet.is_ancestral()

    def test_sur_ancestral(self, sur_graph):
        assert sur_graph.is_ancestral()

    def test_no_bidirected(self):
        g = MixedGraph(3, directed=[(0, 1), (1, 2)])
        assert g.is_ancestral()

    def test_cyclic_precondition(self, chain4_cyclic):
        with pytest.raises(CyclicGraphError):
            chain4_cyclic.is_ancestral()


class TestBidirectedChainGraph:
    def test_sur(self, sur_graph):
        assert sur_graph.is_bidirected_chain_graph()

    def test_quartet(self, quartet):
        # 2 <-> 4 sits in one component but 2 -> 3 -> 4 routes through
        # another, which would force both orientations at once
        assert not quartet.is_bidirected_chain_graph()

    def test_directed_only(self):
        g = MixedGraph(3, directed=[(0, 1), (1, 2)])
        assert g.is_bidirected_chain_graph()


class TestDistrict:
    def test_quartet(self, quartet):
        assert quartet.district(1) == {3}

    def test_five_chain(self, five_chain_almost_identifiable):
        assert five_chain_almost_identifiable.district(0) == {1, 2, 3, 4}

    def test_isolated(self, quartet):
        assert quartet.district(0) == set()


class TestTopologicalOrder:
    def test_quartet_order(self, quartet):
        assert quartet.topological_order() == [0, 1, 2, 3]

    def test_edgeless_tie_break(self):
        assert MixedGraph(3).topological_order() == [0, 1, 2]

    def test_cycle_named(self, chain4_cyclic):
        with pytest.raises(CyclicGraphError) as err:
            chain4_cyclic.topological_order()
        cycle = err.value.cycle
        assert cycle[0] == cycle[-1]
        assert set(cycle) <= {1, 2, 3}

    def test_parents_precede_children(self):
        g = MixedGraph(5, directed=[(3, 0), (4, 3), (0, 1)])
        order = g.topological_order()
        pos = {v: k for k, v in enumerate(order)}
        for j, i in g.directed:
            assert pos[j] < pos[i]


class TestProperties:
    @given(mixed_graphs())
    @settings(max_examples=60, deadline=None)
    def test_never_own_parent_or_spouse(self, g):
        for i in range(g.n_vertices):
            assert i not in g.parents(i)
            assert i not in g.spouses(i)

    @given(mixed_graphs())
    @settings(max_examples=60, deadline=None)
    def test_spouse_symmetry(self, g):
        for i in range(g.n_vertices):
            for j in g.spouses(i):
                assert i in g.spouses(j)

    @given(mixed_graphs())
    @settings(max_examples=60, deadline=None)
    def test_bow_free_means_disjoint_pairs(self, g):
        pairs = {(min(j, i), max(j, i)) for j, i in g.directed}
        assert g.is_bow_free() == (not pairs & g.bidirected)

    @given(mixed_graphs())
    @settings(max_examples=60, deadline=None)
    def test_district_is_equivalence_query(self, g):
        for i in range(g.n_vertices):
            for j in g.district(i):
                assert i in g.district(j)

    @given(mixed_graphs(force_acyclic=True))
    @settings(max_examples=60, deadline=None)
    def test_ancestral_implies_bow_free(self, g):
        if g.is_ancestral():
            assert g.is_bow_free()

    @given(mixed_graphs(force_acyclic=True))
    @settings(max_examples=60, deadline=None)
    def test_topological_order_valid_and_deterministic(self, g):
        order = g.topological_order()
        assert order == g.topological_order()
        pos = {v: k for k, v in enumerate(order)}
        for j, i in g.directed:
            assert pos[j] < pos[i]


def test_relabel_roundtrip(quartet):
    perm = [2, 0, 3, 1]
    h = quartet.relabel(perm)
    inverse = np.argsort(perm)
    assert h.relabel(list(inverse)) == quartet
