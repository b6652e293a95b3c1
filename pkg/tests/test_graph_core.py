import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphs.graph_core import (
    EdgeLabel,
    Graph,
    LabeledMultigraph,
    VertexLabel,
    combine_neighborhoods,
    degree,
    format_graph,
    neighborhood,
    parse_graph,
    read_graph,
    write_graph,
)
from graphs.words import bits_to_words, count_words
from mpc.errors import IncompletenessError, InputError
from tests.conftest import graph_from_nx
from tests.strategies import labeled_multigraphs


def path_multigraph(n: int) -> LabeledMultigraph:
    return LabeledMultigraph.from_graph(Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)]))


def cycle_multigraph(n: int) -> LabeledMultigraph:
    return LabeledMultigraph.from_graph(Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)]))


class TestGraph:
    def test_from_edges_normalizes_and_merges(self):
        g = Graph.from_edges(3, [(1, 0), (0, 1), (2, 1)])
        assert g.sorted_edges == ((0, 1), (1, 2))
        assert g.m == 2

    def test_self_loop_rejected(self):
        with pytest.raises(InputError):
            Graph.from_edges(3, [(1, 1)])

    def test_out_of_range_rejected(self):
        with pytest.raises(InputError):
            Graph.from_edges(3, [(0, 3)])

    def test_induced_keeps_ids(self, path4):
        sub = path4.induced({1, 2, 3})
        assert sub.n == 4
        assert sub.sorted_edges == ((1, 2), (2, 3))
        assert sub.degree(0) == 0


class TestGraphText:
    def test_parse(self):
        g = parse_graph("3 2\n0 1\n1 2\n")
        assert g.n == 3 and g.sorted_edges == ((0, 1), (1, 2))

    def test_format_parse_identity(self, petersen):
        assert parse_graph(format_graph(petersen)) == petersen

    @pytest.mark.parametrize("text", [
        "",
        "3",
        "3 2\n0 1\n",
        "3 1\n0 0\n",
        "3 1\n0 5\n",
        "3 2\n0 1\n1 0\n",
        "3 1\n0 x\n",
    ])
    def test_malformed_text(self, text):
        with pytest.raises(InputError):
            parse_graph(text)

    def test_file_io(self, tmp_path, cycle6):
        path = tmp_path / "c6.txt"
        write_graph(cycle6, path)
        assert path.read_text().splitlines()[0] == "6 6"
        assert read_graph(path) == cycle6


class TestLabeledMultigraph:
    def test_parallel_edges_in_distinct_phases(self):
        g = LabeledMultigraph.build(2, [(0, 1, EdgeLabel(1, 5, 6)), (0, 1, EdgeLabel(2, 7, 8))])
        assert degree(g, 0) == 2
        assert degree(g, 0, phase_filter=1) == 1
        assert degree(g, 1, phase_filter=2) == 1

    def test_parallel_edges_in_same_phase_rejected(self):
        with pytest.raises(InputError):
            LabeledMultigraph.build(2, [(0, 1, EdgeLabel(1, 5, 6)), (1, 0, EdgeLabel(1, 7, 8))])

    def test_reversed_edge_keeps_rho_with_endpoint(self):
        g = LabeledMultigraph.build(2, [(1, 0, EdgeLabel(1, 10, 20))])
        (_, _, label), = g.edges
        assert label.rho_of(1, 0) == 10
        assert label.rho_of(0, 1) == 20

    def test_degree_bound_enforced(self):
        with pytest.raises(InputError):
            LabeledMultigraph.build(3, [(0, 1, None), (0, 2, None)], d=1)

    def test_degree_of_triangle(self, triangle):
        g = LabeledMultigraph.from_graph(triangle)
        assert [degree(g, v) for v in range(3)] == [2, 2, 2]

    def test_degree_invalid_vertex(self, triangle):
        with pytest.raises(InputError):
            degree(LabeledMultigraph.from_graph(triangle), 3)

    def test_degree_matches_adjacency_scan(self):
        g = graph_from_nx(nx.gnp_random_graph(20, 0.3, seed=4))
        labeled = LabeledMultigraph.from_graph(g)
        for v in range(g.n):
            assert degree(labeled, v) == sum(1 for u, w in g.edges if v in (u, w))

    def test_ports_sorted_by_neighbor_then_label(self):
        g = LabeledMultigraph.build(3, [(0, 2, EdgeLabel(1, 0, 0)), (0, 1, EdgeLabel(2, 0, 0)),
                                        (0, 1, EdgeLabel(1, 0, 0))])
        assert [(w, label.phase) for w, label in g.ports(0)] == [(1, 1), (1, 2), (2, 1)]


class TestNeighborhood:
    def test_radius_zero_on_path(self):
        ball = neighborhood(path_multigraph(3), 1, 0)
        assert ball.core_vertices == {1}
        assert [(u, v) for u, v, _ in ball.edges] == [(0, 1), (1, 2)]
        assert ball.boundary == (0, 2)

    def test_star_leaf_radius_one(self):
        star = LabeledMultigraph.from_graph(Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)]))
        ball = neighborhood(star, 1, 1)
        assert ball.core_vertices == {0, 1}
        assert [(u, v) for u, v, _ in ball.edges] == [(0, 1), (0, 2), (0, 3)]
        assert ball.boundary == (2, 3)
        with pytest.raises(InputError):
            ball.label_of(2)

    def test_cycle_radius_three_is_whole_cycle(self):
        ball = neighborhood(cycle_multigraph(6), 0, 3)
        assert ball.core_vertices == set(range(6))
        assert len(ball.edges) == 6
        assert ball.boundary == ()

    def test_invalid_vertex(self):
        with pytest.raises(InputError):
            neighborhood(path_multigraph(3), 5, 1)

    def test_serialize_is_canonical(self):
        labels = [VertexLabel(bits=(1, 0, 1)), None, VertexLabel(state=(7,))]
        g = LabeledMultigraph.build(3, [(2, 1, EdgeLabel(1, 3, 4)), (0, 1, None)], labels)
        ball = neighborhood(g, 1, 1)
        assert ball.serialize() == neighborhood(g, 1, 1).serialize()
        assert ball.word_size() == len(ball.serialize())

    def test_restrict(self):
        g = cycle_multigraph(10)
        assert neighborhood(g, 0, 4).restrict(2) == neighborhood(g, 0, 2)
        with pytest.raises(InputError):
            neighborhood(g, 0, 2).restrict(3)


class TestCombine:
    def test_path_grows_to_whole_path(self):
        g = path_multigraph(5)
        combined = combine_neighborhoods(neighborhood(g, 2, 1), [neighborhood(g, 0, 1), neighborhood(g, 4, 1)], 1)
        assert combined == neighborhood(g, 2, 3)
        assert combined.core_vertices == set(range(5))

    def test_isolated_vertex(self):
        g = LabeledMultigraph.build(1, [])
        combined = combine_neighborhoods(neighborhood(g, 0, 0), [], 0)
        assert combined.radius == 1
        assert combined.vertices == neighborhood(g, 0, 0).vertices
        assert combined.edges == ()

    def test_cycle_eight(self):
        g = cycle_multigraph(8)
        combined = combine_neighborhoods(neighborhood(g, 0, 1), [neighborhood(g, 2, 1), neighborhood(g, 6, 1)], 1)
        assert combined == neighborhood(g, 0, 3)

    def test_missing_extension(self):
        g = path_multigraph(5)
        with pytest.raises(IncompletenessError):
            combine_neighborhoods(neighborhood(g, 2, 1), [neighborhood(g, 0, 1)], 1)

    def test_radius_mismatch(self):
        g = path_multigraph(5)
        with pytest.raises(InputError):
            combine_neighborhoods(neighborhood(g, 2, 1), [neighborhood(g, 0, 1), neighborhood(g, 4, 0)], 1)

    def test_extension_off_boundary(self):
        g = path_multigraph(5)
        with pytest.raises(InputError):
            combine_neighborhoods(neighborhood(g, 2, 0), [neighborhood(g, 1, 0), neighborhood(g, 3, 0),
                                                          neighborhood(g, 4, 0)], 0)

    @settings(max_examples=60, deadline=None)
    @given(labeled_multigraphs(max_n=14), st.integers(0, 3), st.integers(0, 3), st.data())
    def test_combine_matches_direct_collection(self, g, r, r_ext, data):
        v = data.draw(st.integers(0, g.n - 1))
        base = neighborhood(g, v, r)
        extensions = [neighborhood(g, w, r_ext) for w in base.boundary]
        assert combine_neighborhoods(base, extensions, r_ext) == neighborhood(g, v, r + r_ext + 1)


class TestWords:
    def test_scalars_and_containers(self):
        assert count_words(None) == 0
        assert count_words(5) == 1
        assert count_words((1, 2, (3, 4))) == 4
        assert count_words({1: 2}) == 2

    def test_bits(self):
        assert bits_to_words(0) == 0
        assert bits_to_words(64) == 1
        assert bits_to_words(65) == 2
        assert VertexLabel(bits=(1,) * 65).word_size() == 3 + 2

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            count_words(object())
