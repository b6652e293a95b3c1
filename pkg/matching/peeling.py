"""
Peeling Matching and Vertex Cover
Threshold-halving peeling in memory and as a direct MPC simulation, sharing
one friend-selection and coloring routine so both consume randomness alike
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from graphs.graph_core import Edge, Graph, normalize_edge
from mpc.errors import InputError
from mpc.simulator import Message, MpcRun

logger = logging.getLogger(__name__)

BLUE = 1
RED = 0


@dataclass(frozen=True)
class PhaseRecord:
    """One peeling phase: threshold, heavy set, friends, new matches and cover"""
    delta: float
    heavy: FrozenSet[int]
    friends: FrozenSet[int]
    matched: Tuple[Edge, ...]
    covered: FrozenSet[int]
    residual_max_degree: int
    source: str = 'global'

    def summary(self) -> Dict:
        return {
            'source': self.source,
            'delta': self.delta,
            'heavy': len(self.heavy),
            'friends': len(self.friends),
            'matched': len(self.matched),
            'covered': len(self.covered),
            'residual_max_degree': self.residual_max_degree,
        }


@dataclass
class PeelingOutput:
    """Matching M, vertex cover C and the per-phase trace that produced them"""
    matching: FrozenSet[Edge] = frozenset()
    cover: FrozenSet[int] = frozenset()
    phase_trace: List[PhaseRecord] = field(default_factory=list)
    iterations: List[Dict] = field(default_factory=list)

    @property
    def matched_vertices(self) -> FrozenSet[int]:
        return frozenset(v for edge in self.matching for v in edge)

    def merge(self, other: 'PeelingOutput') -> 'PeelingOutput':
        return PeelingOutput(
            self.matching | other.matching,
            self.cover | other.cover,
            self.phase_trace + other.phase_trace,
            self.iterations + other.iterations,
        )

    def heavy_match_rate(self) -> Tuple[int, int]:
        """(heavy vertices matched in their phase, heavy vertices) pooled over phases"""
        matched = heavy = 0
        for record in self.phase_trace:
            endpoints = {v for edge in record.matched for v in edge}
            heavy += len(record.heavy)
            matched += len(record.heavy & endpoints)
        return matched, heavy

    def summary(self) -> Dict:
        return {
            'matching_size': len(self.matching),
            'cover_size': len(self.cover),
            'phases': [record.summary() for record in self.phase_trace],
            'iterations': self.iterations,
        }


def select_friends(heavy: Sequence[int], neighbors_of: Callable[[int], Sequence[int]],
                   rng: np.random.Generator) -> Dict[int, int]:
    """A uniform residual neighbor for every heavy vertex, drawn in ascending vertex order"""
    friends = {}
    for v in sorted(heavy):
        nbrs = neighbors_of(v)
        friends[v] = int(nbrs[int(rng.integers(len(nbrs)))])
    return friends


def draw_colors(vertices: Iterable[int], rng: np.random.Generator) -> Dict[int, int]:
    ordered = sorted(vertices)
    if not ordered:
        return {}
    bits = rng.integers(0, 2, size=len(ordered))
    return {v: int(bit) for v, bit in zip(ordered, bits)}


def resolve_matches(friends: Dict[int, int], color_of: Callable[[int], int]) -> List[Edge]:
    """Pairs (v, f(v)) with v blue, f(v) red and no other blue claimer of f(v)"""
    blue_claims: Dict[int, int] = {}
    for v, f in friends.items():
        if color_of(v) == BLUE:
            blue_claims[f] = blue_claims.get(f, 0) + 1
    matched = []
    for v, f in sorted(friends.items()):
        if color_of(v) == BLUE and color_of(f) == RED and blue_claims[f] == 1:
            matched.append(normalize_edge(v, f))
    return matched


def _residual_adjacency(g: Graph, alive: Set[int]) -> Dict[int, List[int]]:
    adjacency: Dict[int, List[int]] = {v: [] for v in alive}
    for u, v in g.sorted_edges:
        if u in alive and v in alive:
            adjacency[u].append(v)
            adjacency[v].append(u)
    return adjacency


def _max_degree(adjacency: Dict[int, List[int]]) -> int:
    return max((len(nbrs) for nbrs in adjacency.values()), default=0)


def next_threshold(delta: float, max_degree: int) -> float:
    """Halve delta, then keep halving past thresholds no residual vertex reaches"""
    delta /= 2
    while delta > max_degree:
        delta /= 2
    return delta


def global_peeling(g: Graph, d: float, rng: np.random.Generator) -> PeelingOutput:
    """Peel heavy vertices and their friends while the threshold halves from d.

    Phases in which no vertex is heavy are skipped and the loop stops once
    no residual edge is left; neither changes M or C.
    """
    if g.max_degree > d:
        raise InputError(f"Degree bound d={d} violated: max degree is {g.max_degree}")
    alive = set(range(g.n))
    matching: Set[Edge] = set()
    cover: Set[int] = set()
    trace: List[PhaseRecord] = []
    delta = float(d)
    while delta >= 1:
        adjacency = _residual_adjacency(g, alive)
        max_degree = _max_degree(adjacency)
        if max_degree == 0:
            break
        delta = next_threshold(delta, max_degree)
        heavy = [v for v in sorted(alive) if len(adjacency[v]) >= delta]
        friends = select_friends(heavy, adjacency.__getitem__, rng)
        colors = draw_colors(set(heavy) | set(friends.values()), rng)
        matched = resolve_matches(friends, colors.__getitem__)
        covered = frozenset(heavy) | frozenset(friends.values())
        matching.update(matched)
        cover |= covered
        alive -= covered
        trace.append(PhaseRecord(
            delta, frozenset(heavy), frozenset(friends.values()), tuple(matched), covered,
            _max_degree(_residual_adjacency(g, alive)),
        ))
    return PeelingOutput(frozenset(matching), frozenset(cover), trace)


def _degrees_from_prefix(records: List) -> Dict[int, int]:
    """Per-source degree from ((u, w), running count) records sorted by u"""
    degrees: Dict[int, int] = {}
    previous = 0
    last_of: Dict[int, int] = {}
    for (u, _), running in records:
        last_of[u] = running
    for u in sorted(last_of):
        degrees[u] = last_of[u] - previous
        previous = last_of[u]
    return degrees


def mpc_global_peeling(run: MpcRun, g: Graph, d: float,
                       rng: Optional[np.random.Generator] = None) -> PeelingOutput:
    """global_peeling over directed edge records on the run's machines.

    A phase is a sort of the adjacency records by source, a prefix sum that
    yields residual degrees, a maximum over those degrees that picks the next
    threshold at which some vertex is heavy, and one round in which heavy
    vertices claim their friends and records touching covered vertices are
    dropped. A sort and prefix sum over no records end the loop.
    """
    if g.max_degree > d:
        raise InputError(f"Degree bound d={d} violated: max degree is {g.max_degree}")
    rng = rng if rng is not None else run.rng_stream
    records = [(u, v) for u, v in g.sorted_edges] + [(v, u) for u, v in g.sorted_edges]
    run.load(records)

    alive = set(range(g.n))
    matching: Set[Edge] = set()
    cover: Set[int] = set()
    trace: List[PhaseRecord] = []
    delta = float(d)
    with run.section("global_peeling"):
        while delta >= 1:
            run.primitive_sort(key=lambda rec: rec)
            run.primitive_prefix_sum(value=lambda rec: 1)
            annotated = run.all_records()
            if not annotated:
                break
            degrees = _degrees_from_prefix(annotated)
            max_degree = run.primitive_max(value=lambda rec: degrees[rec[0][0]])
            delta = next_threshold(delta, max_degree)
            neighbors: Dict[int, List[int]] = {}
            for (u, w), _ in annotated:
                neighbors.setdefault(u, []).append(w)
            heavy = [v for v in sorted(alive) if degrees.get(v, 0) >= delta]
            friends = select_friends(heavy, neighbors.__getitem__, rng)
            colors = draw_colors(set(heavy) | set(friends.values()), rng)
            covered = frozenset(heavy) | frozenset(friends.values())
            matched = _exchange_claims(run, friends, colors, covered)
            matching.update(matched)
            cover |= covered
            alive -= covered
            residual = _source_degrees(run.all_records())
            trace.append(PhaseRecord(
                delta, frozenset(heavy), frozenset(friends.values()), tuple(matched), covered,
                max(residual.values(), default=0),
            ))
    logger.info(f"MPC global peeling: |M|={len(matching)}, |C|={len(cover)}, {len(trace)} phases")
    return PeelingOutput(frozenset(matching), frozenset(cover), trace)


def _source_degrees(records) -> Counter:
    return Counter(u for u, _ in records)


def _exchange_claims(run: MpcRun, friends: Dict[int, int], colors: Dict[int, int],
                     covered: FrozenSet[int]) -> List[Edge]:
    """One round: the record (v, f(v)) of every heavy v becomes a claim.

    A claim is the record itself with both color bits packed into one word,
    delivered to the machine that stores the record, so a machine never
    receives more words than it already holds. The same round drops every
    record touching a covered vertex; the next phase's sort rebalances.
    """
    def claim(machine_id, storage, inbox, rng):
        kept = []
        outbox = []
        for (u, w), _ in storage:
            if friends.get(u) == w:
                outbox.append(Message(machine_id, (u, w, 2 * colors[u] + colors[w])))
            if u not in covered and w not in covered:
                kept.append((u, w))
        return kept, outbox

    run.exec_round(claim)
    claims: Dict[int, int] = {}
    color_seen: Dict[int, int] = {}
    for machine in run.machines:
        for msg in machine.inbox:
            u, w, packed = msg.payload
            claims[u] = w
            color_seen[u], color_seen[w] = packed >> 1, packed & 1
    return resolve_matches(claims, color_seen.__getitem__)
