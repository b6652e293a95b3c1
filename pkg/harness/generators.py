"""
Graph Generators
Seeded synthetic inputs for experiments: random graphs, uniform random trees,
unions of random forests with bounded arboricity, and a few fixed families
"""

import logging
import math
from typing import Callable, Dict, List, Literal, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from graphs.graph_core import Edge, Graph
from mpc.errors import InputError

logger = logging.getLogger(__name__)

GeneratorKind = Literal['gnp', 'tree', 'forest_union', 'grid', 'disjoint_matching', 'star', 'cycle', 'path']


class GeneratorSpec(BaseModel):
    """Family, size, family parameters and seed of a generated graph"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: GeneratorKind
    n: int = Field(ge=0)
    p: float = Field(default=0.1, ge=0, le=1)
    alpha: int = Field(default=1, ge=1)
    rows: Optional[int] = Field(default=None, ge=1)
    cols: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def check_shape(self) -> 'GeneratorSpec':
        if self.kind == 'cycle' and 0 < self.n < 3:
            raise ValueError(f"A cycle needs at least 3 vertices, got n={self.n}")
        if self.kind == 'grid' and self.rows is not None and self.cols is not None:
            if self.rows * self.cols > self.n:
                raise ValueError(f"Grid {self.rows}x{self.cols} does not fit in n={self.n}")
        return self

    def with_n(self, n: int) -> 'GeneratorSpec':
        return GeneratorSpec.model_validate({**self.model_dump(), 'n': n})


def _from_networkx(n: int, nx_graph: nx.Graph) -> Graph:
    return Graph.from_edges(n, nx_graph.edges())


def random_tree_edges(n: int, rng: np.random.Generator) -> List[Edge]:
    """Edges of a uniform random labeled tree on 0..n-1, from a Prüfer sequence"""
    if n < 2:
        return []
    sequence = [int(x) for x in rng.integers(0, n, size=n - 2)]
    return list(nx.from_prufer_sequence(sequence).edges())


def _gnp(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    return _from_networkx(spec.n, nx.gnp_random_graph(spec.n, spec.p, seed=spec.seed))


def _tree(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    return Graph.from_edges(spec.n, random_tree_edges(spec.n, rng))


def _forest_union(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    # a union of alpha spanning trees has arboricity at most alpha
    edges: List[Edge] = []
    for _ in range(spec.alpha):
        edges.extend(random_tree_edges(spec.n, rng))
    return Graph.from_edges(spec.n, edges)


def grid_shape(spec: GeneratorSpec) -> Tuple[int, int]:
    if spec.rows is not None and spec.cols is not None:
        return spec.rows, spec.cols
    rows = spec.rows or max(1, math.isqrt(spec.n))
    cols = spec.cols or max(1, spec.n // rows)
    return rows, cols


def _grid(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    if spec.n == 0:
        return Graph.empty(0)
    rows, cols = grid_shape(spec)
    lattice = nx.grid_2d_graph(rows, cols)
    edges = [(r1 * cols + c1, r2 * cols + c2) for (r1, c1), (r2, c2) in lattice.edges()]
    return Graph.from_edges(spec.n, edges)


def _disjoint_matching(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    return Graph.from_edges(spec.n, [(2 * i, 2 * i + 1) for i in range(spec.n // 2)])


def _star(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    if spec.n == 0:
        return Graph.empty(0)
    return _from_networkx(spec.n, nx.star_graph(spec.n - 1))


def _cycle(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    return _from_networkx(spec.n, nx.cycle_graph(spec.n))


def _path(spec: GeneratorSpec, rng: np.random.Generator) -> Graph:
    return _from_networkx(spec.n, nx.path_graph(spec.n))


GENERATORS: Dict[str, Callable[[GeneratorSpec, np.random.Generator], Graph]] = {
    'gnp': _gnp,
    'tree': _tree,
    'forest_union': _forest_union,
    'grid': _grid,
    'disjoint_matching': _disjoint_matching,
    'star': _star,
    'cycle': _cycle,
    'path': _path,
}


def generate(spec: GeneratorSpec) -> Graph:
    """Build the graph described by spec; the same spec always yields the same graph"""
    if spec.kind not in GENERATORS:
        raise InputError(f"Unknown generator kind {spec.kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    graph = GENERATORS[spec.kind](spec, rng)
    logger.info(f"Generated {spec.kind} graph: n={graph.n}, m={graph.m}, seed={spec.seed}")
    return graph
