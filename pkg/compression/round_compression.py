"""
Round Compression
Simulates t rounds of a LOCAL algorithm in O(log t) MPC rounds by repeatedly
growing every vertex's collected neighborhood, then running the algorithm on it
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from graphs.graph_core import (
    LabeledEdge,
    LabeledMultigraph,
    Neighborhood,
    VertexLabel,
    canonical_edges,
    combine_neighborhoods,
)
from localmodel.local_model import (
    LocalAlgorithm,
    LocalOutput,
    local_space_words,
    simulate_local_direct,
    simulate_on_neighborhood,
)
from mpc.errors import InputError
from mpc.simulator import Message, MpcRun

logger = logging.getLogger(__name__)

# words reserved per owned vertex, in units of s*
PER_VERTEX_FACTOR = 8


@dataclass(frozen=True)
class CompressionPlan:
    """Radius schedule and predicted per-vertex space of one compression"""
    t: int
    radius_schedule: Tuple[Tuple[int, int], ...]
    s_star: int
    d: int
    l_V: int
    l_E: int
    s_A: int

    @property
    def radii(self) -> Tuple[int, ...]:
        """Collected radius before the first and after every step"""
        values = [0]
        for r, r_ext in self.radius_schedule:
            values.append(r + r_ext + 1)
        return tuple(values)


def plan(t: int, d: int, l_V: int, l_E: int, s_A: int) -> CompressionPlan:
    """Radius schedule r -> r + r' + 1 with r' = min(r, t - r - 1)"""
    if t < 0:
        raise InputError(f"Round count must be non-negative, got {t}")
    if d < 2:
        raise InputError(f"Degree parameter must be at least 2, got {d}")
    schedule = []
    r = 0
    while r < t:
        r_ext = min(r, t - r - 1)
        schedule.append((r, r_ext))
        r = r + r_ext + 1
    s_star = d ** t * (l_V + d * (1 + l_E) + s_A)
    return CompressionPlan(t, tuple(schedule), s_star, d, l_V, l_E, s_A)


class VertexRecord(NamedTuple):
    vertex: int
    label: Optional[VertexLabel]


class EdgeRecord(NamedTuple):
    owner: int
    edge: LabeledEdge


def _record_owner(record) -> int:
    return record[0]


class RoundCompression:
    """Runs one LOCAL algorithm on a labeled multigraph inside an MPC run.

    Vertex v is owned by machine v // vertices_per_machine of a temporary
    pool whose machines hold PER_VERTEX_FACTOR * s* words per owned vertex.
    Each owner keeps the balls of its vertices as a list of Neighborhoods.
    """

    def __init__(self, run: MpcRun):
        self.run = run
        self.vertices_per_machine = 1
        self.vertex_peaks: Dict[int, int] = {}
        # what the previous round left in the inboxes: 'records', 'extensions' or None
        self._delivered: Optional[str] = None
        self._extension_radius = 0

    def owner(self, v: int) -> int:
        return v // self.vertices_per_machine

    def compress(self, g: LabeledMultigraph, a: LocalAlgorithm) -> LocalOutput:
        if a.degree_bound is not None and g.max_degree > a.degree_bound:
            raise InputError(f"Max degree {g.max_degree} exceeds the algorithm's bound {a.degree_bound}")
        d = max(2, g.d)
        l_V, l_E = g.label_words()
        compression_plan = plan(a.rounds, d, l_V, l_E, a.space_bound)
        per_vertex = PER_VERTEX_FACTOR * compression_plan.s_star
        capacity = max(self.run.config.S, per_vertex)
        self.vertices_per_machine = max(1, capacity // per_vertex)
        machine_count = max(1, math.ceil(g.n / self.vertices_per_machine))
        self.vertex_peaks = {}
        self._delivered = None

        name = type(a).__name__
        rounds_before = self.run.stats.rounds_used
        peaks_before = len(self.run.stats.peak_words_per_round)
        logger.info(
            f"Compressing {name}: t={a.rounds}, d={d}, s*={compression_plan.s_star}, "
            f"{len(compression_plan.radius_schedule)} steps on {machine_count} machines"
        )
        with self.run.section("compression"):
            with self.run.borrow_machines(machine_count, capacity, reason=f"round compression of {name}"):
                self.distribute(g)
                for r, r_ext in compression_plan.radius_schedule:
                    self.gather_step(r, r_ext)
                outputs = self.simulate(g.n, a)

        machine_peaks = self.run.stats.peak_words_per_round[peaks_before:]
        self.run.stats.compression_reports.append({
            'algorithm': name,
            'plan': asdict(compression_plan),
            'per_vertex_peak_words': max(self.vertex_peaks.values(), default=0),
            'machine_peak_words': max(machine_peaks, default=0),
            'machines': machine_count,
            'capacity': capacity,
            'space_raised': capacity > self.run.config.S,
            'rounds': self.run.stats.rounds_used - rounds_before,
        })
        return outputs

    def _note_peak(self, v: int, words: int) -> None:
        self.vertex_peaks[v] = max(self.vertex_peaks.get(v, 0), words)

    def distribute(self, g: LabeledMultigraph) -> None:
        """Sort vertex and edge records by owner and move them to the owning machines"""
        records: List[Any] = [VertexRecord(v, g.vertex_labels[v]) for v in range(g.n)]
        for edge in g.edges:
            records.append(EdgeRecord(edge[0], edge))
            records.append(EdgeRecord(edge[1], edge))
        self.run.load(records)
        self.run.primitive_sort(key=lambda rec: (_record_owner(rec), isinstance(rec, EdgeRecord)))

        def deliver(machine_id, storage, inbox, rng):
            batches: Dict[int, List[Any]] = {}
            for record in storage:
                batches.setdefault(self.owner(_record_owner(record)), []).append(record)
            return [], [Message(dest, tuple(batch)) for dest, batch in sorted(batches.items())]

        self.run.exec_round(deliver)
        self._delivered = 'records'

    def _assemble_balls(self, inbox: List[Message]) -> List[Neighborhood]:
        labels: Dict[int, Optional[VertexLabel]] = {}
        incident: Dict[int, List[LabeledEdge]] = {}
        for msg in inbox:
            for record in msg.payload:
                if isinstance(record, VertexRecord):
                    labels[record.vertex] = record.label
                else:
                    incident.setdefault(record.owner, []).append(record.edge)
        balls = []
        for v in sorted(labels):
            ball = Neighborhood(v, 0, ((v, labels[v]),), canonical_edges(incident.get(v, ())))
            self._note_peak(v, ball.word_size())
            balls.append(ball)
        return balls

    def _extend_balls(self, storage: List[Neighborhood], inbox: List[Message]) -> List[Neighborhood]:
        received: Dict[int, Neighborhood] = {}
        for msg in inbox:
            for ext in msg.payload[1]:
                received[ext.center] = ext
        combined = []
        for ball in storage:
            extensions = [received[w] for w in ball.boundary if w in received]
            self._note_peak(ball.center, sum(ext.word_size() for ext in extensions))
            merged = combine_neighborhoods(ball, extensions, self._extension_radius)
            self._note_peak(ball.center, merged.word_size())
            combined.append(merged)
        return combined

    def _current_balls(self, storage: List[Any], inbox: List[Message]) -> List[Neighborhood]:
        """Local computation opening a round: absorb what the last round delivered"""
        if self._delivered == 'records':
            return self._assemble_balls(inbox)
        if self._delivered == 'extensions':
            return self._extend_balls(storage, inbox)
        return list(storage)

    def gather_step(self, r: int, r_ext: int) -> None:
        """Grow every owned ball from N_r(v) to N_{r+r'+1}(v).

        Request round: each machine asks the owner of every boundary vertex
        once, however many of its balls share that vertex. Response round:
        the owner answers each requesting machine with N_{r'}(w).
        """
        def request(machine_id, storage, inbox, rng):
            balls = self._current_balls(storage, inbox)
            wanted: Dict[int, set] = {}
            for ball in balls:
                if ball.radius != r:
                    raise InputError(f"Ball of {ball.center} has radius {ball.radius}, expected {r}")
                for w in ball.boundary:
                    wanted.setdefault(self.owner(w), set()).add(w)
            outbox = [Message(dest, (machine_id, tuple(sorted(ids)))) for dest, ids in sorted(wanted.items())]
            return balls, outbox

        def respond(machine_id, storage, inbox, rng):
            by_center = {ball.center: ball for ball in storage}
            outbox = []
            for msg in inbox:
                requester, ids = msg.payload
                outbox.append(Message(requester, (machine_id, tuple(by_center[w].restrict(r_ext) for w in ids))))
            return storage, outbox

        self.run.exec_round(request)
        self._delivered = None
        self.run.exec_round(respond)
        self._delivered = 'extensions'
        self._extension_radius = r_ext
        logger.debug(f"Gather step r={r} -> {r + r_ext + 1} done")

    def simulate(self, n: int, a: LocalAlgorithm) -> LocalOutput:
        """Final round: run `a` on every collected ball and gather the outputs"""
        def run_balls(machine_id, storage, inbox, rng):
            results = []
            for ball in self._current_balls(storage, inbox):
                self._note_peak(ball.center, local_space_words(ball, a))
                results.append((ball.center, simulate_on_neighborhood(ball, a)))
            return results, []

        self.run.exec_round(run_balls)
        self._delivered = None
        values: List[Any] = [None] * n
        for v, value in self.run.all_records():
            values[v] = value
        return LocalOutput(tuple(values))


def round_compression(run: MpcRun, g: LabeledMultigraph, a: LocalAlgorithm) -> LocalOutput:
    """Outputs of `a` on every vertex of g, identical to simulate_local_direct"""
    return RoundCompression(run).compress(g, a)


def direct_local_rounds(run: MpcRun, g: LabeledMultigraph, a: LocalAlgorithm) -> LocalOutput:
    """Baseline: one MPC round per LOCAL round plus one round to distribute"""
    outputs = simulate_local_direct(g, a)
    with run.section("direct_local"):
        run.charge(a.rounds + 1, reason=f"direct simulation of {type(a).__name__}")
    return outputs


def _as_state(value: Any) -> Tuple[int, ...]:
    if isinstance(value, (tuple, list)):
        return tuple(int(x) for x in value)
    return (int(value),)


def with_checkpoint(g: LabeledMultigraph, outputs: LocalOutput) -> LabeledMultigraph:
    """Copy of g whose vertex labels carry each vertex's output as state"""
    labels = tuple(
        replace(label if label is not None else VertexLabel(), state=_as_state(outputs[v]))
        for v, label in enumerate(g.vertex_labels)
    )
    return LabeledMultigraph(g.n, g.edges, labels, g.d)


def phased_round_compression(run: MpcRun, g: LabeledMultigraph,
                             phase_algorithms: Sequence[LocalAlgorithm]) -> LocalOutput:
    """Compress each phase separately, checkpointing outputs into vertex labels"""
    if not phase_algorithms:
        raise InputError("At least one phase algorithm is required")
    current = g
    outputs = None
    for index, a in enumerate(phase_algorithms):
        outputs = round_compression(run, current, a)
        if index + 1 < len(phase_algorithms):
            current = with_checkpoint(current, outputs)
    logger.info(f"Phased compression of {len(phase_algorithms)} phases done")
    return outputs
