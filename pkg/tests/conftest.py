import networkx as nx
import pytest

from graphs.graph_core import Graph
from mpc.simulator import MpcConfig, MpcRun


def graph_from_nx(nx_graph) -> Graph:
    nx_graph = nx.convert_node_labels_to_integers(nx_graph)
    return Graph.from_edges(nx_graph.number_of_nodes(), nx_graph.edges())


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def cycle6():
    return Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])


@pytest.fixture
def petersen():
    return graph_from_nx(nx.petersen_graph())


@pytest.fixture
def star10():
    # K_{1,9}: center 0 and leaves 1..9
    return Graph.from_edges(10, [(0, leaf) for leaf in range(1, 10)])


@pytest.fixture
def small_run():
    """A run with 4 machines of 64 words"""
    return MpcRun(MpcConfig(n=16, delta=0.5, S=64, M=4, total_space_budget=0))
