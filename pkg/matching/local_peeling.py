"""
Local Peeling
The peeling phases as a deterministic LOCAL algorithm on a sampled multigraph:
colors come from vertex labels, friends from the rho draws on edge labels
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from graphs.graph_core import LabeledMultigraph, Port, VertexLabel, normalize_edge
from localmodel.local_model import LocalAlgorithm, LocalOutput
from matching.peeling import BLUE, RED, PeelingOutput, PhaseRecord
from mpc.errors import ContractViolation

logger = logging.getLogger(__name__)

# alive broadcast, friend claim, match confirm
ROUNDS_PER_PHASE = 3
NONE = -1


@dataclass(frozen=True)
class PeelState:
    colors: Tuple[int, ...]
    alive: bool = True
    in_cover: bool = False
    partner: int = NONE
    heavy_phase: int = 0
    friend_phase: int = 0
    match_phase: int = 0
    heavy: bool = False
    friend: int = NONE
    is_friend: bool = False


class LocalPeeling(LocalAlgorithm):
    """k' peeling phases on a multigraph whose edges carry (phase, rho_u, rho_v).

    Phase i uses only edges labeled i between alive vertices; its heavy
    threshold is 2^k' * lambda * log n / 2^i. Output per vertex is
    (in_cover, partner or -1, heavy phase, friend phase, match phase).
    """

    output_words = 5

    def __init__(self, k_prime: int, lam: float, log_n: float, degree_bound: int):
        self.k_prime = k_prime
        self.lam = lam
        self.log_n = log_n
        self.degree_bound = degree_bound
        self.rounds = ROUNDS_PER_PHASE * k_prime
        self.space_bound = 2 * degree_bound + k_prime + 16

    def threshold(self, phase: int) -> float:
        return 2 ** self.k_prime * self.lam * self.log_n / 2 ** phase

    def init(self, vertex: int, label: Optional[VertexLabel], ports: Tuple[Port, ...]) -> PeelState:
        colors = label.color_bits if label is not None else ()
        if len(colors) < self.k_prime:
            raise ContractViolation(
                f"Vertex {vertex} carries {len(colors)} color bits, local peeling needs {self.k_prime}"
            )
        return PeelState(colors=tuple(colors[:self.k_prime]))

    def send(self, round_no: int, vertex: int, state: PeelState, ports: Tuple[Port, ...]) -> Dict[int, int]:
        if not state.alive:
            return {}
        phase, step = divmod(round_no - 1, ROUNDS_PER_PHASE)
        if step == 0:
            return {w: 1 for w in sorted({w for w, _ in ports})}
        if step == 1:
            return {state.friend: state.colors[phase]} if state.heavy else {}
        if state.is_friend and state.partner != NONE and state.match_phase == phase + 1:
            return {state.partner: 1}
        return {}

    def receive(self, round_no: int, vertex: int, state: PeelState, ports: Tuple[Port, ...],
                inbox: Dict[int, int]) -> PeelState:
        if not state.alive:
            return state
        phase_index, step = divmod(round_no - 1, ROUNDS_PER_PHASE)
        phase = phase_index + 1
        if step == 0:
            return self._find_friend(vertex, state, ports, frozenset(inbox), phase)
        if step == 1:
            return self._take_claims(state, inbox, phase)
        return self._confirm(state, inbox, phase)

    def _find_friend(self, vertex: int, state: PeelState, ports: Tuple[Port, ...],
                     alive_neighbors: frozenset, phase: int) -> PeelState:
        candidates = [
            (label.rho_of(vertex, w), w)
            for w, label in ports
            if label is not None and label.phase == phase and w in alive_neighbors
        ]
        heavy = len(candidates) >= self.threshold(phase)
        # ties on rho go to the smaller neighbor id
        friend = min(candidates)[1] if heavy else NONE
        return replace(state, heavy=heavy, friend=friend, is_friend=False)

    def _take_claims(self, state: PeelState, inbox: Dict[int, int], phase: int) -> PeelState:
        if not inbox:
            return state
        blue = [w for w, color in sorted(inbox.items()) if color == BLUE]
        partner = state.partner
        match_phase = state.match_phase
        if state.colors[phase - 1] == RED and len(blue) == 1:
            partner, match_phase = blue[0], phase
        return replace(state, is_friend=True, partner=partner, match_phase=match_phase)

    def _confirm(self, state: PeelState, inbox: Dict[int, int], phase: int) -> PeelState:
        partner, match_phase = state.partner, state.match_phase
        if state.heavy and inbox:
            partner, match_phase = next(iter(sorted(inbox))), phase
        if not (state.heavy or state.is_friend):
            return replace(state, heavy=False, friend=NONE)
        return replace(
            state,
            alive=False,
            in_cover=True,
            partner=partner,
            match_phase=match_phase,
            heavy_phase=phase if state.heavy else state.heavy_phase,
            friend_phase=phase if state.is_friend else state.friend_phase,
            heavy=False,
            friend=NONE,
            is_friend=False,
        )

    def output(self, vertex: int, state: PeelState) -> Tuple[int, int, int, int, int]:
        return (int(state.in_cover), state.partner, state.heavy_phase, state.friend_phase, state.match_phase)


def decode_peeling(outputs: LocalOutput, algorithm: LocalPeeling,
                   g: Optional[LabeledMultigraph] = None) -> PeelingOutput:
    """Matching, cover and per-phase trace from the per-vertex outputs"""
    matching = set()
    cover = set()
    heavy: Dict[int, set] = {}
    friends: Dict[int, set] = {}
    matched: Dict[int, List] = {}
    for v, (in_cover, partner, heavy_phase, friend_phase, match_phase) in enumerate(outputs):
        if in_cover:
            cover.add(v)
        if heavy_phase:
            heavy.setdefault(heavy_phase, set()).add(v)
        if friend_phase:
            friends.setdefault(friend_phase, set()).add(v)
        if partner != NONE and v < partner:
            edge = normalize_edge(v, partner)
            matching.add(edge)
            matched.setdefault(match_phase, []).append(edge)

    trace = []
    removed: set = set()
    for phase in range(1, algorithm.k_prime + 1):
        h, f = frozenset(heavy.get(phase, ())), frozenset(friends.get(phase, ()))
        removed |= h | f
        trace.append(PhaseRecord(
            algorithm.threshold(phase), h, f, tuple(sorted(matched.get(phase, ()))), h | f,
            _residual_phase_degree(g, removed, phase + 1) if g is not None else -1,
            source='local',
        ))
    return PeelingOutput(frozenset(matching), frozenset(cover), trace)


def _residual_phase_degree(g: LabeledMultigraph, removed: set, phase: int) -> int:
    """Max degree among the next phase's sampled edges between surviving vertices"""
    counts: Dict[int, int] = {}
    for u, v, label in g.edges:
        if label is not None and label.phase == phase and u not in removed and v not in removed:
            counts[u] = counts.get(u, 0) + 1
            counts[v] = counts.get(v, 0) + 1
    return max(counts.values(), default=0)
