import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from compression.round_compression import round_compression
from graphs.graph_core import EdgeLabel, Graph, LabeledMultigraph, VertexLabel
from localmodel.local_model import simulate_local_direct
from matching.local_peeling import NONE, LocalPeeling, decode_peeling
from matching.match_mpc import build_sampled_multigraph
from matching.peeling import global_peeling, mpc_global_peeling, resolve_matches
from mpc.errors import ContractViolation, InputError
from mpc.simulator import MpcConfig, MpcRun, init_run
from qa.oracles import check_cover, check_matching
from tests.conftest import graph_from_nx
from tests.strategies import graphs, seeds


def run_for(g: Graph, seed: int = 0, cost: int = 1) -> MpcRun:
    return init_run(g, MpcConfig.for_graph(g, seed=seed, primitive_round_cost=cost))


def assert_valid(g, output):
    assert check_matching(g, output.matching)
    assert check_cover(g, output.cover)
    assert output.matched_vertices <= output.cover
    assert len(output.cover) >= len(output.matching)


class TestGlobalPeeling:
    def test_empty_graph(self):
        output = global_peeling(Graph.empty(5), 1, np.random.default_rng(0))
        assert output.matching == frozenset() and output.cover == frozenset()

    def test_single_edge(self):
        g = Graph.from_edges(2, [(0, 1)])
        matched = 0
        for seed in range(400):
            output = global_peeling(g, 1, np.random.default_rng(seed))
            assert output.cover == {0, 1}
            matched += len(output.matching)
        assert 0.4 < matched / 400 < 0.6

    def test_triangle_covered_in_one_phase(self, triangle):
        output = global_peeling(triangle, 2, np.random.default_rng(1))
        assert output.cover == {0, 1, 2}
        first = output.phase_trace[0]
        assert first.heavy == {0, 1, 2}
        assert first.residual_max_degree == 0

    def test_degree_bound(self, triangle):
        with pytest.raises(InputError):
            global_peeling(triangle, 1, np.random.default_rng(0))

    def test_resolve_matches_needs_a_single_blue_claimer(self):
        colors = {0: 1, 1: 1, 2: 0, 3: 0}
        # 0 and 1 are blue claimers of 2; the red claimer 3 does not count
        assert resolve_matches({0: 2, 1: 2, 3: 2}, colors.__getitem__) == []
        assert resolve_matches({0: 2, 3: 2}, colors.__getitem__) == [(0, 2)]

    @settings(max_examples=80, deadline=None)
    @given(graphs(max_n=24), seeds)
    def test_output_is_valid(self, g, seed):
        assert_valid(g, global_peeling(g, max(1, g.max_degree), np.random.default_rng(seed)))


class TestMpcGlobalPeeling:
    def test_same_randomness_same_output(self, petersen):
        for seed in range(5):
            direct = global_peeling(petersen, 3, np.random.default_rng(seed))
            simulated = mpc_global_peeling(run_for(petersen), petersen, 3, np.random.default_rng(seed))
            assert simulated.matching == direct.matching
            assert simulated.cover == direct.cover

    @pytest.mark.parametrize("cost", [1, 2, 3])
    def test_one_phase_rounds(self, cost):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        run = run_for(g, cost=cost)
        output = mpc_global_peeling(run, g, 1)
        assert len(output.phase_trace) == 1
        # sort, prefix sum, max degree, claim round that also drops covered records
        assert run.stats.rounds_used == 3 * cost + 1
        assert run.stats.rounds_by_section == {'global_peeling': 3 * cost + 1}

    def test_skips_thresholds_above_the_max_degree(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        run = run_for(g)
        output = mpc_global_peeling(run, g, 64)
        assert output.cover == {0, 1, 2, 3}
        assert [record.delta for record in output.phase_trace] == [1.0]
        # one phase, then a sort and prefix sum that find no records left
        assert run.stats.rounds_used == 4 + 2

    def test_trace_matches_in_memory_peeling(self, petersen):
        direct = global_peeling(petersen, 16, np.random.default_rng(4))
        simulated = mpc_global_peeling(run_for(petersen), petersen, 16, np.random.default_rng(4))
        assert [r.delta for r in simulated.phase_trace] == [r.delta for r in direct.phase_trace]
        assert direct.phase_trace[0].delta == 2.0

    def test_clustered_claimers_stay_within_space(self):
        # every claimer id falls in one residue class modulo M
        n, M = 10_000, 204
        g = Graph.from_edges(n, [(i * M, i * M + 1) for i in range(30)])
        run = run_for(g)
        assert run.M == M and run.config.S == 100
        output = mpc_global_peeling(run, g, 1)
        assert_valid(g, output)
        assert output.cover == frozenset(v for edge in g.edges for v in edge)
        assert run.stats.max_machine_words <= run.config.S

    @pytest.mark.parametrize("seed", range(5))
    def test_sparse_random_graph(self, seed):
        g = graph_from_nx(nx.gnp_random_graph(500, 4 / 500, seed=seed))
        output = mpc_global_peeling(run_for(g, seed=seed), g, g.max_degree)
        assert_valid(g, output)

    def test_uses_run_stream_by_default(self, path4):
        first = mpc_global_peeling(run_for(path4, seed=9), path4, 2)
        second = mpc_global_peeling(run_for(path4, seed=9), path4, 2)
        assert first.matching == second.matching


def star_with_ties() -> LabeledMultigraph:
    edges = [(0, 2, EdgeLabel(1, 5, 0)), (0, 1, EdgeLabel(1, 5, 0))]
    labels = [VertexLabel(color_bits=(0,)), VertexLabel(color_bits=(1,)), VertexLabel(color_bits=(1,))]
    return LabeledMultigraph.build(3, edges, labels)


class TestLocalPeeling:
    def test_needs_color_bits(self):
        g = LabeledMultigraph.build(2, [(0, 1, EdgeLabel(1, 0, 0))], [VertexLabel(), VertexLabel()])
        with pytest.raises(ContractViolation):
            simulate_local_direct(g, LocalPeeling(1, 1, 1, 2))

    def test_rho_tie_goes_to_lower_id(self):
        g = star_with_ties()
        algorithm = LocalPeeling(1, 0.5, 2.0, 2)
        state = algorithm.init(0, g.vertex_labels[0], g.ports(0))
        state = algorithm.receive(1, 0, state, g.ports(0), {1: 1, 2: 1})
        assert state.heavy and state.friend == 1

    def test_two_blue_claimers_block_the_match(self):
        # leaves 1 and 2 are blue and both pick the red center
        g = star_with_ties()
        outputs = simulate_local_direct(g, LocalPeeling(1, 0.5, 2.0, 2))
        decoded = decode_peeling(outputs, LocalPeeling(1, 0.5, 2.0, 2), g)
        assert decoded.matching == frozenset()
        assert decoded.cover == {0, 1, 2}

    def test_isolated_vertex_survives(self):
        g = LabeledMultigraph.build(3, [(0, 1, EdgeLabel(1, 0, 0))],
                                    [VertexLabel(color_bits=(1,)), VertexLabel(color_bits=(0,)),
                                     VertexLabel(color_bits=(1,))])
        outputs = simulate_local_direct(g, LocalPeeling(1, 0.5, 2.0, 2))
        assert outputs[2] == (0, NONE, 0, 0, 0)
        assert outputs[0][1] == 1 and outputs[1][1] == 0

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_compressed_matches_direct_on_sampled_graphs(self, seed):
        g = graph_from_nx(nx.gnp_random_graph(20, 0.2, seed=seed % 1000))
        rng = np.random.default_rng(seed)
        log_n = math.log2(g.n)
        sampled = build_sampled_multigraph(g, 20.0, 2, 2, 10 ** 6, rng, log_n=log_n)
        algorithm = LocalPeeling(2, 2, log_n, max(2, sampled.d))
        run = MpcRun(MpcConfig(n=20, delta=0.5, S=64, M=4, total_space_budget=0))
        compressed = round_compression(run, sampled, algorithm)
        assert compressed == simulate_local_direct(sampled, algorithm)
        decoded = decode_peeling(compressed, algorithm, sampled)
        assert check_matching(g, decoded.matching)
        assert decoded.matched_vertices <= decoded.cover
