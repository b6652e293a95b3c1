import logging
import math
import statistics

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from pydantic import ValidationError

from graphs.graph_core import Graph
from harness.generators import GeneratorSpec, generate
from matching.match_mpc import (
    MatchMpcParams,
    auto_k,
    best_of,
    boost,
    build_sampled_multigraph,
    repetitions_for,
    run_match,
    sampled_degree_bound,
    sampling_probability,
    stats_summary,
    trial_seeds,
    trials_for,
    two_plus_eps,
    two_plus_eps_cover,
    two_plus_eps_matching,
)
from mpc.errors import InputError
from qa.oracles import check_cover, check_matching, max_matching_exact, min_vertex_cover_exact
from tests.conftest import graph_from_nx
from tests.strategies import graphs, seeds


def disjoint_matching(n: int) -> Graph:
    return Graph.from_edges(n, [(2 * i, 2 * i + 1) for i in range(n // 2)])


def direct(**kwargs) -> MatchMpcParams:
    return MatchMpcParams(lam=2, simulation='direct', **kwargs)


class TestParams:
    def test_lambda_alias(self):
        assert MatchMpcParams(**{'lambda': 3}).lam == 3
        assert MatchMpcParams(lam=3).lam == 3

    @pytest.mark.parametrize("kwargs", [{'k': 1}, {'lam': 1}, {'delta': 1.0}, {'simulation': 'fast'}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            MatchMpcParams(**kwargs)

    @pytest.mark.parametrize("n, k", [(1, 2), (16, 2), (2 ** 16, 2), (2 ** 64, 3), (2 ** 256, 6)])
    def test_auto_k(self, n, k):
        assert auto_k(n) == k

    def test_default_rho_range(self):
        assert MatchMpcParams().resolve_rho_max(10) == 10 ** 6
        assert MatchMpcParams(rho_max=7).resolve_rho_max(10) == 7


class TestSampling:
    def test_probability(self):
        assert sampling_probability(100, 2, 2, 5) == (0.4, False)
        assert sampling_probability(10, 2, 2, 5) == (1.0, True)
        assert sampled_degree_bound(2, 2, 5) == 320

    def test_clamped_sample_keeps_every_edge_in_every_phase(self, petersen, caplog):
        with caplog.at_level(logging.WARNING):
            sampled = build_sampled_multigraph(petersen, 14, 2, 2, 100, np.random.default_rng(0))
        assert "clamped" in caplog.text
        assert len(sampled.edges) == 2 * petersen.m
        for phase in (1, 2):
            assert sorted((u, v) for u, v, label in sampled.edges if label.phase == phase) == list(petersen.sorted_edges)
        assert all(len(label.color_bits) == 2 for label in sampled.vertex_labels)
        assert all(0 <= label.rho_u <= 100 and 0 <= label.rho_v <= 100 for _, _, label in sampled.edges)

    def test_empty_residual(self):
        sampled = build_sampled_multigraph(Graph.empty(5), 100, 3, 2, 10, np.random.default_rng(0))
        assert sampled.edges == ()
        assert sampled.n == 5

    def test_threshold_guard(self, petersen):
        # lambda^2 log n is about 13.3 for n = 10
        with pytest.raises(InputError):
            build_sampled_multigraph(petersen, 13, 2, 2, 100, np.random.default_rng(0))


class TestMatchMpc:
    def test_small_graph_skips_to_global_peeling(self):
        g = graph_from_nx(nx.gnp_random_graph(16, 0.4, seed=2))
        output, run = run_match(g, MatchMpcParams(lam=4))
        assert output.iterations == []
        assert set(run.stats.rounds_by_section) == {'global_peeling'}
        assert check_matching(g, output.matching) and check_cover(g, output.cover)

    def test_sections_of_a_compressed_run(self):
        g = graph_from_nx(nx.gnp_random_graph(40, 0.3, seed=1))
        output, run = run_match(g, MatchMpcParams(lam=2, k=2))
        assert len(output.iterations) >= 1
        assert {'compression', 'cover_removal', 'global_peeling'} <= set(run.stats.rounds_by_section)
        assert check_matching(g, output.matching) and check_cover(g, output.cover)

    @pytest.mark.parametrize("seed", range(3))
    def test_compressed_and_direct_agree(self, seed):
        g = graph_from_nx(nx.gnp_random_graph(40, 0.3, seed=seed))
        compressed, compressed_run = run_match(g, MatchMpcParams(lam=2, k=2, seed=seed))
        simulated, direct_run = run_match(g, direct(k=2, seed=seed))
        assert compressed.matching == simulated.matching
        assert compressed.cover == simulated.cover
        assert 'direct_local' in direct_run.stats.rounds_by_section
        assert 'direct_local' not in compressed_run.stats.rounds_by_section

    def test_disjoint_matching_size(self):
        g = disjoint_matching(64)
        sizes = [len(run_match(g, direct(seed=seed))[0].matching) for seed in range(50)]
        assert statistics.median(sizes) >= g.n / 8

    @settings(max_examples=40, deadline=None)
    @given(graphs(max_n=30), seeds)
    def test_outputs_are_valid(self, g, seed):
        output, _ = run_match(g, direct(seed=seed))
        assert check_matching(g, output.matching)
        assert check_cover(g, output.cover)
        assert output.matched_vertices <= output.cover

    def test_heavy_match_rate(self):
        records, matched, heavy = [], 0, 0
        for graph_seed in range(3):
            g = graph_from_nx(nx.gnp_random_graph(200, 0.1, seed=graph_seed))
            for seed in range(5):
                output, _ = run_match(g, direct(seed=seed))
                records.extend(output.iterations)
                m, h = output.heavy_match_rate()
                matched, heavy = matched + m, heavy + h
        assert records
        assert matched / heavy >= 0.04

    @pytest.mark.slow
    def test_iteration_invariants(self):
        # lambda = 5 leaves a vertex above 2 * delta a miss chance of roughly n^-2 per iteration
        params = MatchMpcParams(lam=5, simulation='direct')
        records = []
        for graph_seed, p in [(0, 0.4), (1, 0.5), (2, 0.6)]:
            g = graph_from_nx(nx.gnp_random_graph(600, p, seed=graph_seed))
            for seed in range(8):
                output, _ = run_match(g, params.with_seed(seed))
                records.extend(output.iterations)
        assert records
        assert sum(not r['degree_violation'] for r in records) >= 0.99 * len(records)
        assert sum(r['sampled_max_degree'] <= r['sampled_degree_bound'] for r in records) >= 0.99 * len(records)

    def test_deterministic(self, petersen):
        first = stats_summary(*run_match(petersen, MatchMpcParams(lam=2, seed=11)))
        second = stats_summary(*run_match(petersen, MatchMpcParams(lam=2, seed=11)))
        assert first == second

    def test_summary_keys(self, petersen):
        summary = stats_summary(*run_match(petersen, direct()))
        assert {'matching', 'cover', 'rounds', 'max_machine_words', 'total_words',
                'rounds_by_section', 'phase_trace_summary'} <= set(summary)

    @pytest.mark.slow
    def test_rounds_shrink_with_k(self):
        g = disjoint_matching(4096)
        totals, compressed = {}, {}
        for k in (2, 4, 8):
            runs = [run_match(g, MatchMpcParams(k=k, lam=2, seed=seed))[1] for seed in range(3)]
            totals[k] = statistics.median(run.stats.rounds_used for run in runs)
            compressed[k] = statistics.median(run.stats.rounds_by_section['compression'] for run in runs)
        assert totals[2] > totals[4] > totals[8]
        assert totals[8] <= 0.5 * totals[2]
        assert compressed[8] <= 0.5 * compressed[2]

    def test_default_lambda_on_a_dense_graph(self):
        g = generate(GeneratorSpec(kind='gnp', n=64, p=0.5, seed=1))
        output, run = run_match(g, MatchMpcParams())
        summary = stats_summary(output, run)
        # lambda^2 log n = 6144 is far above n = 64
        assert summary['compressed_iterations'] == 0
        assert set(summary['rounds_by_section']) == {'global_peeling'}
        assert check_matching(g, output.matching) and check_cover(g, output.cover)

    def test_clustered_claimers_stay_within_space(self):
        n, M = 10_000, 204
        g = Graph.from_edges(n, [(i * M, i * M + 1) for i in range(30)])
        output, run = run_match(g, MatchMpcParams())
        assert run.M == M and run.config.S == 100
        assert check_matching(g, output.matching) and check_cover(g, output.cover)
        assert run.stats.max_machine_words <= run.config.S
        assert stats_summary(output, run)['space_raises'] == 0

    @pytest.mark.slow
    def test_validity_sweep(self):
        kinds = ['gnp', 'tree', 'forest_union', 'grid', 'disjoint_matching', 'star', 'cycle', 'path']
        runs = 0
        for n, seed_count in [(64, 7), (256, 7), (1024, 7), (4096, 2)]:
            # balls of the peeling rounds outgrow the desk budget on large connected graphs
            simulation = 'compressed' if n <= 64 else 'direct'
            for kind in kinds:
                for seed in range(seed_count):
                    g = generate(GeneratorSpec(kind=kind, n=n, p=min(0.5, 8 / n), alpha=2, seed=seed))
                    for k in (2, 4, 8):
                        output, run = run_match(g, MatchMpcParams(lam=2, k=k, seed=seed, simulation=simulation))
                        runs += 1
                        assert check_matching(g, output.matching)
                        assert check_cover(g, output.cover)
                        assert output.matched_vertices <= output.cover
                        assert len(output.cover) >= len(output.matching)
        assert runs >= 500


class TestBoosting:
    def test_trials(self):
        assert trials_for(None, None) == 1
        assert trials_for(5, 0.5) == 5
        assert trials_for(None, 0.01) == 7
        with pytest.raises(InputError):
            trials_for(0, None)
        with pytest.raises(InputError):
            trials_for(None, 1.5)

    def test_trial_seeds(self):
        spawned = trial_seeds(5, 4)
        assert spawned[0] == 5
        assert len(set(spawned)) == 4
        assert trial_seeds(5, 4) == spawned

    def test_empty_graph(self):
        output = boost(Graph.empty(4), direct(), trials=3)
        assert output.matching == frozenset() and output.cover == frozenset()

    def test_best_trial_wins(self, petersen):
        single, _ = run_match(petersen, direct(seed=0))
        assert len(boost(petersen, direct(seed=0), trials=4).matching) >= len(single.matching)
        assert len(boost(petersen, direct(seed=0), trials=4, goal='cover').cover) <= len(single.cover)


class TestTwoPlusEps:
    def test_repetitions(self):
        assert repetitions_for(0.2) == math.ceil(4 * math.log2(5))
        with pytest.raises(InputError):
            repetitions_for(0)

    @pytest.mark.parametrize("seed", range(3))
    def test_matching_and_cover(self, seed):
        g = graph_from_nx(nx.gnp_random_graph(30, 0.2, seed=seed))
        matching = two_plus_eps_matching(g, direct(seed=seed), 0.25)
        cover = two_plus_eps_cover(g, direct(seed=seed), 0.25)
        assert check_matching(g, matching)
        assert check_cover(g, cover)

    def test_empty_graph(self):
        assert two_plus_eps_matching(Graph.empty(3), direct(), 0.5) == frozenset()
        assert two_plus_eps_cover(Graph.empty(3), direct(), 0.5) == frozenset()


def oracle_corpus(count: int = 50):
    """Graphs with edges and n <= 22, small enough for the exact solvers"""
    kinds = ['gnp', 'tree', 'forest_union', 'grid', 'cycle']
    corpus = []
    for i in range(count):
        spec = GeneratorSpec(kind=kinds[i % len(kinds)], n=10 + (7 * i) % 13, p=0.3, alpha=2, seed=i)
        g = generate(spec)
        if g.m == 0:
            continue
        corpus.append((g, max_matching_exact(g)[0], min_vertex_cover_exact(g)[0]))
    return corpus


def ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else math.inf


@pytest.mark.slow
class TestApproximation:
    def test_constant_factor(self):
        for g, best_matching, best_cover in oracle_corpus():
            matching_ratios, cover_ratios = [], []
            for seed in range(20):
                # one trial succeeds with constant probability; the returned output is the best of four
                output, _ = best_of(g, direct(seed=seed), 4)
                matching_ratios.append(ratio(best_matching, len(output.matching)))
                cover_ratios.append(ratio(len(output.cover), best_cover))
            assert statistics.median(matching_ratios) <= 4, f"n={g.n}, m={g.m}"
            assert statistics.median(cover_ratios) <= 4, f"n={g.n}, m={g.m}"

    def test_two_plus_eps(self):
        for g, best_matching, best_cover in oracle_corpus():
            matching_ratios, cover_ratios = [], []
            for seed in range(20):
                result = two_plus_eps(g, direct(seed=seed), 0.2)
                assert check_matching(g, result.matching) and check_cover(g, result.cover)
                matching_ratios.append(ratio(best_matching, len(result.matching)))
                cover_ratios.append(ratio(len(result.cover), best_cover))
            assert statistics.median(matching_ratios) <= 2.2, f"n={g.n}, m={g.m}"
            assert statistics.median(cover_ratios) <= 2.5, f"n={g.n}, m={g.m}"
