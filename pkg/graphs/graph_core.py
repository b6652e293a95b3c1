"""
Graph and Neighborhood Data Structures
Simple graphs, labeled multigraphs and radius-r balls N_r(v) with the
combine operation used by round compression
"""

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from graphs.words import BITS_PER_WORD, bits_to_words
from mpc.errors import IncompletenessError, InputError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


def normalize_edge(u: int, v: int) -> Edge:
    """Return the edge with its smaller endpoint first"""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph over vertex ids 0..n-1"""
    n: int
    edges: FrozenSet[Edge]

    def __post_init__(self):
        if self.n < 0:
            raise InputError(f"Vertex count must be non-negative, got {self.n}")
        for u, v in self.edges:
            if u == v:
                raise InputError(f"Self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise InputError(f"Edge ({u}, {v}) is not normalized or out of range for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> 'Graph':
        """Build a graph, normalizing endpoint order and merging duplicates"""
        normalized = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InputError(f"Self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"Edge ({u}, {v}) out of range for n={n}")
            normalized.add(normalize_edge(u, v))
        return cls(n, frozenset(normalized))

    @classmethod
    def empty(cls, n: int = 0) -> 'Graph':
        return cls(n, frozenset())

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        neighbors: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.sorted_edges:
            neighbors[u].append(v)
            neighbors[v].append(u)
        return tuple(tuple(sorted(nbrs)) for nbrs in neighbors)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def max_degree(self) -> int:
        return max((len(nbrs) for nbrs in self.adjacency), default=0)

    def induced(self, vertices: Iterable[int]) -> 'Graph':
        """Subgraph induced by the given vertices; ids and n are kept"""
        keep = set(vertices)
        return Graph(self.n, frozenset((u, v) for u, v in self.edges if u in keep and v in keep))

    def without(self, vertices: Iterable[int]) -> 'Graph':
        drop = set(vertices)
        return Graph(self.n, frozenset((u, v) for u, v in self.edges if u not in drop and v not in drop))


# Graph text format: "n m" then m lines "u v"

def parse_graph(text: str) -> Graph:
    """Parse the whitespace-separated graph text format"""
    tokens = text.split()
    if len(tokens) < 2:
        raise InputError("Graph text must start with 'n m'")
    try:
        values = [int(t) for t in tokens]
    except ValueError as e:
        raise InputError(f"Graph text contains a non-integer token: {e}") from e
    n, m = values[0], values[1]
    body = values[2:]
    if len(body) != 2 * m:
        raise InputError(f"Expected {m} edges, found {len(body) / 2:g}")
    edges = [(body[2 * i], body[2 * i + 1]) for i in range(m)]
    graph = Graph.from_edges(n, edges)
    if graph.m != m:
        raise InputError(f"Graph text lists duplicate edges ({m} lines, {graph.m} distinct)")
    return graph


def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.sorted_edges)
    return "\n".join(lines) + "\n"


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(format_graph(g))
    logger.info(f"Wrote graph with n={g.n}, m={g.m} to {path}")


class EdgeLabel(NamedTuple):
    """Label (phase, rho_u, rho_v) of a multigraph edge (u, v) with u < v"""
    phase: int
    rho_u: int
    rho_v: int

    def rho_of(self, vertex: int, neighbor: int) -> int:
        """The rank draw belonging to `vertex` on the edge to `neighbor`"""
        return self.rho_u if vertex < neighbor else self.rho_v


def _pack_bits(bits: Sequence[int]) -> List[int]:
    words = []
    for start in range(0, len(bits), BITS_PER_WORD):
        word = 0
        for offset, bit in enumerate(bits[start:start + BITS_PER_WORD]):
            word |= (bit & 1) << offset
        words.append(word)
    return words


@dataclass(frozen=True)
class VertexLabel:
    """Random bits, per-phase color bits and checkpointed state of a vertex"""
    bits: Tuple[int, ...] = ()
    color_bits: Tuple[int, ...] = ()
    state: Tuple[int, ...] = ()

    def to_words(self) -> Tuple[int, ...]:
        return (
            len(self.bits), *_pack_bits(self.bits),
            len(self.color_bits), *_pack_bits(self.color_bits),
            len(self.state), *self.state,
        )

    def word_size(self) -> int:
        return 3 + bits_to_words(len(self.bits)) + bits_to_words(len(self.color_bits)) + len(self.state)


LabeledEdge = Tuple[int, int, Optional[EdgeLabel]]
Port = Tuple[int, Optional[EdgeLabel]]


def _edge_key(edge: LabeledEdge):
    u, v, label = edge
    return (u, v, label if label is not None else ())


def canonical_edges(edges: Iterable[LabeledEdge]) -> Tuple[LabeledEdge, ...]:
    """Normalized labeled edges in the order every structure here stores them"""
    return tuple(sorted(edges, key=_edge_key))


def _port_key(port: Port):
    neighbor, label = port
    return (neighbor, label if label is not None else ())


def _label_words(label) -> Tuple[int, ...]:
    if label is None:
        return (0,)
    if isinstance(label, VertexLabel):
        return label.to_words()
    return (len(label), *label)


@dataclass(frozen=True)
class LabeledMultigraph:
    """Multigraph with edge labels, vertex labels and a degree bound d"""
    n: int
    edges: Tuple[LabeledEdge, ...]
    vertex_labels: Tuple[Optional[VertexLabel], ...]
    d: int

    def __post_init__(self):
        if len(self.vertex_labels) != self.n:
            raise InputError(f"Expected {self.n} vertex labels, got {len(self.vertex_labels)}")
        seen = set()
        for u, v, label in self.edges:
            if u == v:
                raise InputError(f"Self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise InputError(f"Edge ({u}, {v}) is not normalized or out of range for n={self.n}")
            key = (u, v, label.phase if label is not None else None)
            if key in seen:
                raise InputError(f"Parallel edges ({u}, {v}) share phase {key[2]}")
            seen.add(key)
        if self.max_degree > self.d:
            raise InputError(f"Degree bound d={self.d} violated: max degree is {self.max_degree}")

    @classmethod
    def build(cls, n: int, edges: Iterable[LabeledEdge],
              vertex_labels: Optional[Sequence[Optional[VertexLabel]]] = None,
              d: Optional[int] = None) -> 'LabeledMultigraph':
        """Normalize edges, sort them canonically and default the degree bound"""
        normalized = []
        for u, v, label in edges:
            if u > v:
                # the rho draws travel with their endpoints
                u, v = v, u
                if label is not None:
                    label = EdgeLabel(label.phase, label.rho_v, label.rho_u)
            normalized.append((int(u), int(v), label))
        normalized.sort(key=_edge_key)
        labels = tuple(vertex_labels) if vertex_labels is not None else (None,) * n
        degree_count = [0] * n
        for u, v, _ in normalized:
            degree_count[u] += 1
            degree_count[v] += 1
        bound = d if d is not None else max(degree_count, default=0)
        return cls(n, tuple(normalized), labels, bound)

    @classmethod
    def from_graph(cls, g: Graph, vertex_labels: Optional[Sequence[Optional[VertexLabel]]] = None,
                   d: Optional[int] = None) -> 'LabeledMultigraph':
        return cls.build(g.n, ((u, v, None) for u, v in g.sorted_edges), vertex_labels, d)

    @cached_property
    def incidence(self) -> Tuple[Tuple[int, ...], ...]:
        incident: List[List[int]] = [[] for _ in range(self.n)]
        for index, (u, v, _) in enumerate(self.edges):
            incident[u].append(index)
            incident[v].append(index)
        return tuple(tuple(edge_ids) for edge_ids in incident)

    @cached_property
    def max_degree(self) -> int:
        return max((len(edge_ids) for edge_ids in self.incidence), default=0)

    def ports(self, v: int) -> Tuple[Port, ...]:
        """Incident edges of v as (neighbor, label) in canonical order"""
        return self._ports[v]

    @cached_property
    def _ports(self) -> Tuple[Tuple[Port, ...], ...]:
        result = []
        for v, edge_ids in enumerate(self.incidence):
            ports = []
            for index in edge_ids:
                u, w, label = self.edges[index]
                ports.append((w if u == v else u, label))
            ports.sort(key=_port_key)
            result.append(tuple(ports))
        return tuple(result)

    def label_words(self) -> Tuple[int, int]:
        """(l_V, l_E): record words of a vertex and of an edge beyond one endpoint id"""
        l_v = 1 + max((len(_label_words(label)) for label in self.vertex_labels), default=1)
        l_e = 1 + max((len(_label_words(label)) for _, _, label in self.edges), default=1)
        return l_v, l_e

    def to_graph(self) -> Graph:
        """Underlying simple graph (parallel edges merged, labels dropped)"""
        return Graph.from_edges(self.n, ((u, v) for u, v, _ in self.edges))


def degree(g: LabeledMultigraph, v: int, phase_filter: Optional[int] = None) -> int:
    """Incident edge count of v with multiplicity, optionally restricted to one phase"""
    if not 0 <= v < g.n:
        raise InputError(f"Vertex {v} out of range for n={g.n}")
    if phase_filter is None:
        return len(g.incidence[v])
    return sum(1 for _, label in g.ports(v) if label is not None and label.phase == phase_filter)


@dataclass(frozen=True)
class Neighborhood:
    """The ball N_r(center): core vertices with labels and every edge touching them.

    Far endpoints of boundary edges appear only as ids inside edge records;
    they carry no label.
    """
    center: int
    radius: int
    vertices: Tuple[Tuple[int, Optional[VertexLabel]], ...]
    edges: Tuple[LabeledEdge, ...]

    @cached_property
    def core_vertices(self) -> FrozenSet[int]:
        return frozenset(v for v, _ in self.vertices)

    @cached_property
    def _labels(self) -> Dict[int, Optional[VertexLabel]]:
        return dict(self.vertices)

    def label_of(self, v: int) -> Optional[VertexLabel]:
        if v not in self._labels:
            raise InputError(f"Vertex {v} is not a core vertex of N_{self.radius}({self.center})")
        return self._labels[v]

    @cached_property
    def boundary(self) -> Tuple[int, ...]:
        """Endpoints outside the core; all of them sit at distance radius+1"""
        core = self.core_vertices
        outside = set()
        for u, v, _ in self.edges:
            if u not in core:
                outside.add(u)
            if v not in core:
                outside.add(v)
        return tuple(sorted(outside))

    @cached_property
    def _ports(self) -> Dict[int, Tuple[Port, ...]]:
        ports: Dict[int, List[Port]] = {v: [] for v in self.core_vertices}
        for u, v, label in self.edges:
            if u in ports:
                ports[u].append((v, label))
            if v in ports:
                ports[v].append((u, label))
        return {v: tuple(sorted(p, key=_port_key)) for v, p in ports.items()}

    def ports(self, v: int) -> Tuple[Port, ...]:
        """Incident edges of a core vertex, identical to the host graph's ports"""
        return self._ports[v]

    @cached_property
    def distances(self) -> Dict[int, int]:
        """BFS distance from the center for every vertex of the ball"""
        dist = {self.center: 0}
        queue = deque([self.center])
        while queue:
            u = queue.popleft()
            if u not in self._ports:
                continue
            for w, _ in self._ports[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def serialize(self) -> Tuple[int, ...]:
        """Canonical word encoding: header, sorted vertex records, sorted edge records"""
        words: List[int] = [self.center, self.radius, len(self.vertices), len(self.edges)]
        for v, label in self.vertices:
            words.append(v)
            words.extend(_label_words(label))
        for u, v, label in self.edges:
            words.extend((u, v))
            words.extend(_label_words(label))
        return tuple(words)

    @cached_property
    def _word_size(self) -> int:
        return len(self.serialize())

    def word_size(self) -> int:
        return self._word_size

    def restrict(self, radius: int) -> 'Neighborhood':
        """N_radius(center) cut out of this larger ball"""
        if radius > self.radius or radius < 0:
            raise InputError(f"Cannot restrict N_{self.radius} to radius {radius}")
        if radius == self.radius:
            return self
        dist = self.distances
        core = {v for v in self.core_vertices if dist.get(v, radius + 1) <= radius}
        vertices = tuple((v, label) for v, label in self.vertices if v in core)
        edges = tuple(e for e in self.edges if e[0] in core or e[1] in core)
        return Neighborhood(self.center, radius, vertices, edges)


def neighborhood(g: LabeledMultigraph, v: int, r: int) -> Neighborhood:
    """Collect N_r(v) directly from the host graph by BFS"""
    if not 0 <= v < g.n:
        raise InputError(f"Vertex {v} out of range for n={g.n}")
    if r < 0:
        raise InputError(f"Radius must be non-negative, got {r}")
    dist = {v: 0}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for w, _ in g.ports(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    core = sorted(dist)
    edge_ids = set()
    for u in core:
        edge_ids.update(g.incidence[u])
    edges = canonical_edges(g.edges[i] for i in edge_ids)
    return Neighborhood(v, r, tuple((u, g.vertex_labels[u]) for u in core), edges)


def combine_neighborhoods(base: Neighborhood, extensions: Sequence[Neighborhood],
                          extension_radius: int) -> Neighborhood:
    """Merge N_r(v) with N_r'(w) for every boundary vertex w into N_{r+r'+1}(v)"""
    for ext in extensions:
        if ext.radius != extension_radius:
            raise InputError(
                f"Extension N_{ext.radius}({ext.center}) does not have radius {extension_radius}"
            )
    boundary = set(base.boundary)
    centers = {ext.center for ext in extensions}
    stray = centers - boundary
    if stray:
        raise InputError(f"Extensions centered off the boundary of N_{base.radius}({base.center}): {sorted(stray)}")
    missing = boundary - centers
    if missing:
        raise IncompletenessError(
            f"Missing extensions for boundary vertices {sorted(missing)} of N_{base.radius}({base.center})"
        )

    labels = dict(base.vertices)
    edges = set(base.edges)
    for ext in extensions:
        labels.update(ext.vertices)
        edges.update(ext.edges)
    return Neighborhood(
        base.center,
        base.radius + extension_radius + 1,
        tuple(sorted(labels.items(), key=lambda item: item[0])),
        canonical_edges(edges),
    )
