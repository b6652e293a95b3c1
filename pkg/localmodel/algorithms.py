"""
Reference LOCAL Algorithms
Small vertex programs used by the compression demo, the phased pipeline and
the exactness checks
"""

from typing import Any, Dict, Optional, Tuple

from graphs.graph_core import Port, VertexLabel
from localmodel.local_model import LocalAlgorithm

DIGEST_MODULUS = (1 << 61) - 1


def _distinct_neighbors(ports: Tuple[Port, ...]) -> Tuple[int, ...]:
    return tuple(sorted({w for w, _ in ports}))


class OwnIdAlgorithm(LocalAlgorithm):
    """Zero rounds: every vertex outputs its own id"""

    rounds = 0
    space_bound = 1
    output_words = 1

    def init(self, vertex, label, ports):
        return vertex

    def send(self, round_no, vertex, state, ports):
        return {}

    def receive(self, round_no, vertex, state, ports, inbox):
        return state


class LabelEchoAlgorithm(LocalAlgorithm):
    """Zero rounds: every vertex outputs the words of its own label"""

    rounds = 0

    def __init__(self, max_label_words: int = 64):
        self.space_bound = max_label_words
        self.output_words = max_label_words

    def init(self, vertex, label, ports):
        return label.to_words() if label is not None else ()

    def send(self, round_no, vertex, state, ports):
        return {}

    def receive(self, round_no, vertex, state, ports, inbox):
        return state


class MaxIdWithinRadius(LocalAlgorithm):
    """Max id within distance t.

    A vertex whose label carries checkpointed state starts from that value
    instead of its own id, so phases of this algorithm chain.
    """

    space_bound = 1
    output_words = 1

    def __init__(self, t: int):
        self.rounds = t

    def init(self, vertex: int, label: Optional[VertexLabel], ports) -> int:
        if label is not None and label.state:
            return label.state[0]
        return vertex

    def send(self, round_no, vertex, state, ports) -> Dict[int, Any]:
        return {w: state for w in _distinct_neighbors(ports)}

    def receive(self, round_no, vertex, state, ports, inbox) -> int:
        return max([state, *inbox.values()])


class LabelDigestAlgorithm(LocalAlgorithm):
    """Order-sensitive digest of everything within distance t.

    Mixes vertex label bits, edge phases and per-endpoint rho draws, so any
    missing or misplaced record in a collected ball changes the output.
    """

    space_bound = 1
    output_words = 1

    def __init__(self, t: int):
        self.rounds = t

    def init(self, vertex, label, ports) -> int:
        value = vertex + 1
        if label is not None:
            for word in label.to_words():
                value = (value * 1_000_003 + word) % DIGEST_MODULUS
        return value

    def send(self, round_no, vertex, state, ports) -> Dict[int, Any]:
        return {w: state for w in _distinct_neighbors(ports)}

    def receive(self, round_no, vertex, state, ports, inbox) -> int:
        value = (state * 31 + round_no) % DIGEST_MODULUS
        for w, label in ports:
            phase, rho = (0, 0) if label is None else (label.phase, label.rho_of(vertex, w))
            value = (value * 131 + inbox.get(w, 0) * (phase + 1) + rho) % DIGEST_MODULUS
        return value
