"""
LOCAL Model Interface and Reference Simulator
Deterministic vertex programs over labeled multigraphs, executed either with
true round-by-round neighbor messaging or on one collected neighborhood
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Optional, Sequence, Tuple

from graphs.graph_core import LabeledMultigraph, Neighborhood, Port, VertexLabel
from graphs.words import count_words
from mpc.errors import ContractViolation, InputError

logger = logging.getLogger(__name__)


class LocalAlgorithm(ABC):
    """A deterministic t-round LOCAL algorithm.

    All randomness an algorithm needs must come from the vertex and edge
    labels; there is no live random source. Each round every vertex first
    sends one message per neighbor, then folds its inbox into its state.
    """

    rounds: int = 0
    space_bound: int = 64
    output_words: int = 1
    degree_bound: Optional[int] = None

    @abstractmethod
    def init(self, vertex: int, label: Optional[VertexLabel], ports: Tuple[Port, ...]) -> Any:
        """State before round 1, from the vertex's label and incident edges"""

    @abstractmethod
    def send(self, round_no: int, vertex: int, state: Any, ports: Tuple[Port, ...]) -> Dict[int, Any]:
        """Messages keyed by neighbor id"""

    @abstractmethod
    def receive(self, round_no: int, vertex: int, state: Any, ports: Tuple[Port, ...],
                inbox: Dict[int, Any]) -> Any:
        """New state after reading the messages of this round"""

    def output(self, vertex: int, state: Any) -> Any:
        return state

    def check_state(self, vertex: int, state: Any) -> None:
        words = count_words(state)
        if words > self.space_bound:
            raise ContractViolation(
                f"{type(self).__name__} state at vertex {vertex} uses {words} words > s_A={self.space_bound}"
            )

    def check_output(self, vertex: int, value: Any) -> None:
        words = count_words(value)
        if words > self.output_words:
            raise ContractViolation(
                f"{type(self).__name__} output at vertex {vertex} uses {words} words > l_out={self.output_words}"
            )


@dataclass(frozen=True)
class LocalOutput:
    """Per-vertex outputs of a local algorithm, indexed by vertex id"""
    outputs: Tuple[Any, ...]

    def __getitem__(self, v: int) -> Any:
        return self.outputs[v]

    def __len__(self) -> int:
        return len(self.outputs)

    def __iter__(self) -> Iterator[Any]:
        return iter(self.outputs)


def _check_locality(sender: int, outbox: Dict[int, Any], neighbors: frozenset) -> None:
    for dest in outbox:
        if dest not in neighbors:
            raise ContractViolation(f"Vertex {sender} sent a message to non-neighbor {dest}")


def simulate_local_direct(g: LabeledMultigraph, a: LocalAlgorithm) -> LocalOutput:
    """Run `a` for exactly a.rounds synchronous rounds on the whole graph"""
    if a.degree_bound is not None and g.max_degree > a.degree_bound:
        raise InputError(f"Max degree {g.max_degree} exceeds the algorithm's bound {a.degree_bound}")

    ports = [g.ports(v) for v in range(g.n)]
    neighbors = [frozenset(w for w, _ in p) for p in ports]
    states = []
    for v in range(g.n):
        state = a.init(v, g.vertex_labels[v], ports[v])
        a.check_state(v, state)
        states.append(state)

    for round_no in range(1, a.rounds + 1):
        inboxes: list = [{} for _ in range(g.n)]
        for v in range(g.n):
            outbox = a.send(round_no, v, states[v], ports[v])
            _check_locality(v, outbox, neighbors[v])
            for w, msg in outbox.items():
                inboxes[w][v] = msg
        for v in range(g.n):
            states[v] = a.receive(round_no, v, states[v], ports[v], inboxes[v])
            a.check_state(v, states[v])

    outputs = []
    for v in range(g.n):
        value = a.output(v, states[v])
        a.check_output(v, value)
        outputs.append(value)
    return LocalOutput(tuple(outputs))


def simulate_on_neighborhood(nbhd: Neighborhood, a: LocalAlgorithm) -> Any:
    """Output of `a` at nbhd.center computed from N_t(center) alone.

    Only vertices whose state can still influence the center are advanced:
    after round j that is every vertex within distance t - j.
    """
    t = a.rounds
    if nbhd.radius < t:
        raise InputError(f"Neighborhood radius {nbhd.radius} is smaller than the {t} rounds of the algorithm")

    dist = nbhd.distances
    states: Dict[int, Any] = {}
    for v in sorted(nbhd.core_vertices):
        if dist[v] <= t:
            state = a.init(v, nbhd.label_of(v), nbhd.ports(v))
            a.check_state(v, state)
            states[v] = state

    for round_no in range(1, t + 1):
        outboxes = {}
        for v in sorted(states):
            outbox = a.send(round_no, v, states[v], nbhd.ports(v))
            _check_locality(v, outbox, frozenset(w for w, _ in nbhd.ports(v)))
            outboxes[v] = outbox
        horizon = t - round_no
        next_states = {}
        for v in sorted(states):
            if dist[v] > horizon:
                continue
            inbox = {}
            for w in sorted({w for w, _ in nbhd.ports(v)}):
                outbox = outboxes.get(w)
                if outbox is not None and v in outbox:
                    inbox[w] = outbox[v]
            next_states[v] = a.receive(round_no, v, states[v], nbhd.ports(v), inbox)
            a.check_state(v, next_states[v])
        states = next_states

    value = a.output(nbhd.center, states[nbhd.center])
    a.check_output(nbhd.center, value)
    return value


def local_space_words(nbhd: Neighborhood, a: LocalAlgorithm) -> int:
    """Upper bound on the simulation space for one ball: one s_A per core vertex"""
    return len(nbhd.core_vertices) * a.space_bound


def outputs_from_sequence(values: Sequence[Any]) -> LocalOutput:
    return LocalOutput(tuple(values))
