"""
Maximal Independent Set for Bounded Arboricity
Repeatedly take the low-degree part of the residual graph, run a label-driven
local MIS on it through round compression, and remove what it decided
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Literal, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from compression.round_compression import direct_local_rounds, round_compression
from graphs.graph_core import Graph, LabeledMultigraph, Port, VertexLabel
from graphs.words import BITS_PER_WORD
from localmodel.local_model import LocalAlgorithm, LocalOutput
from mpc.errors import ContractViolation, IncompletenessError
from mpc.simulator import MpcConfig, MpcRun, init_run
from qa.oracles import degeneracy

logger = logging.getLogger(__name__)

UNDECIDED = 0
IN_MIS = 1
REMOVED = 2
INACTIVE = 3

# iterations = ITERATIONS_PER_LEVEL * L + EXTRA_ITERATIONS
ITERATIONS_PER_LEVEL = 6
EXTRA_ITERATIONS = 2
ROUNDS_PER_ITERATION = 2
EXTRA_OUTER_PASSES = 3
MAX_FALLBACK_PASSES = 64


def bernoulli_from_bits(bits: Sequence[int], cursor: int, i: int) -> Tuple[int, int]:
    """AND of the next i bits, which is 1 with probability 2^-i; returns (bit, new cursor)"""
    if i < 1:
        raise ContractViolation(f"Bernoulli exponent must be at least 1, got {i}")
    if cursor + i > len(bits):
        raise ContractViolation(f"Bit budget exhausted: need {i} bits at {cursor}, have {len(bits)}")
    value = 1
    for offset in range(i):
        value &= bits[cursor + offset]
    return value, cursor + i


class PackedBits:
    """Read-only bit sequence stored 64 bits per word"""

    def __init__(self, words: Tuple[int, ...], length: int):
        self.words = words
        self.length = length

    @classmethod
    def pack(cls, bits: Sequence[int]) -> 'PackedBits':
        words = []
        for start in range(0, len(bits), BITS_PER_WORD):
            word = 0
            for offset, bit in enumerate(bits[start:start + BITS_PER_WORD]):
                word |= (bit & 1) << offset
            words.append(word)
        return cls(tuple(words), len(bits))

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(index)
        return (self.words[index // BITS_PER_WORD] >> (index % BITS_PER_WORD)) & 1

    def word_size(self) -> int:
        return 1 + len(self.words)


def exponent_levels(max_degree: int) -> int:
    """L = ceil(log2 max_degree) + 1; desire levels are 2^-1 .. 2^-L"""
    return math.ceil(math.log2(max(max_degree, 1))) + 1


@dataclass(frozen=True)
class MisState:
    bits: PackedBits
    status: int = UNDECIDED
    exponent: int = 1
    cursor: int = 0
    marked: int = 0
    joined_now: bool = False
    crowded: bool = False
    max_exponent: int = 1


class LocalMis(LocalAlgorithm):
    """Desire-level MIS with all randomness read from vertex label bits.

    Every iteration is two rounds. In the first, undecided vertices exchange
    (marked, exponent); a marked vertex without a marked undecided neighbor
    joins. In the second, joiners notify their neighbors, which drop out.
    The desire level 2^-j then halves if the neighbors' total desire is at
    least 2 and doubles otherwise, staying within 2^-1 .. 2^-L.
    """

    output_words = 3

    def __init__(self, max_degree: int, iterations_per_level: int = ITERATIONS_PER_LEVEL):
        self.max_degree = max_degree
        self.levels = exponent_levels(max_degree)
        self.iterations = iterations_per_level * self.levels + EXTRA_ITERATIONS
        self.rounds = ROUNDS_PER_ITERATION * self.iterations
        self.label_bits = self.iterations * self.levels
        self.degree_bound = max_degree
        self.space_bound = 16 + math.ceil(self.label_bits / BITS_PER_WORD)

    def draw_mark(self, state: MisState) -> MisState:
        marked, cursor = bernoulli_from_bits(state.bits, state.cursor, state.exponent)
        return replace(state, marked=marked, cursor=cursor)

    def init(self, vertex: int, label: Optional[VertexLabel], ports: Tuple[Port, ...]) -> MisState:
        if label is None:
            return MisState(bits=PackedBits((), 0), status=INACTIVE, exponent=0, max_exponent=0)
        if len(label.bits) < self.label_bits:
            raise ContractViolation(f"Vertex {vertex} carries {len(label.bits)} bits, local MIS needs {self.label_bits}")
        return self.draw_mark(MisState(bits=PackedBits.pack(label.bits)))

    def send(self, round_no: int, vertex: int, state: MisState, ports: Tuple[Port, ...]) -> Dict[int, Tuple]:
        neighbors = sorted({w for w, _ in ports})
        if round_no % ROUNDS_PER_ITERATION == 1:
            if state.status != UNDECIDED:
                return {}
            return {w: (state.marked, state.exponent) for w in neighbors}
        if state.joined_now:
            return {w: 1 for w in neighbors}
        return {}

    def receive(self, round_no: int, vertex: int, state: MisState, ports: Tuple[Port, ...],
                inbox: Dict[int, Tuple]) -> MisState:
        if state.status == INACTIVE:
            return state
        if round_no % ROUNDS_PER_ITERATION == 1:
            return self._after_marks(state, inbox)
        return self._after_notices(round_no, state, inbox)

    def _after_marks(self, state: MisState, inbox: Dict[int, Tuple]) -> MisState:
        if state.status != UNDECIDED:
            return state
        neighbor_marked = any(marked for marked, _ in inbox.values())
        # sum of 2^-j over undecided neighbors >= 2, in integer units of 2^-L
        desire = sum(1 << (self.levels - exponent) for _, exponent in inbox.values())
        crowded = desire >= 2 << self.levels
        if state.marked and not neighbor_marked:
            return replace(state, status=IN_MIS, joined_now=True, crowded=crowded)
        return replace(state, crowded=crowded)

    def _after_notices(self, round_no: int, state: MisState, inbox: Dict[int, int]) -> MisState:
        if state.status == IN_MIS:
            return replace(state, joined_now=False)
        if state.status != UNDECIDED:
            return state
        if inbox:
            return replace(state, status=REMOVED)
        exponent = min(state.exponent + 1, self.levels) if state.crowded else max(state.exponent - 1, 1)
        state = replace(state, exponent=exponent, max_exponent=max(state.max_exponent, exponent))
        if round_no < self.rounds:
            state = self.draw_mark(state)
        return state

    def output(self, vertex: int, state: MisState) -> Tuple[int, int, int]:
        return (state.status, state.max_exponent, state.cursor)


class ArbMisParams(BaseModel):
    """Parameters of one bounded-arboricity MIS run"""
    model_config = ConfigDict(frozen=True)

    alpha: int = Field(default=2, ge=1)
    gamma: Union[int, Literal['auto']] = 'auto'
    seed: int = Field(default=0, ge=0)
    mis_round_budget_constant: int = Field(default=ITERATIONS_PER_LEVEL, ge=1)
    delta: float = Field(default=0.5, gt=0, lt=1)
    primitive_round_cost: int = Field(default=1, ge=1)
    simulation: Literal['compressed', 'direct'] = 'compressed'

    @field_validator('gamma')
    @classmethod
    def check_gamma(cls, value):
        if value != 'auto' and value < 2:
            raise ValueError(f"gamma must be at least 2, got {value}")
        return value

    def resolve_gamma(self, n: int) -> int:
        if self.gamma != 'auto':
            return int(self.gamma)
        log_n = math.log2(n) if n > 1 else 0.0
        if log_n <= 2:
            return 2
        return max(2, round(2 ** math.sqrt(log_n / math.log2(log_n))))


@dataclass
class MisResult:
    """Independent set plus the per-iteration record of how it was found"""
    independent_set: FrozenSet[int]
    outer_iterations: int = 0
    fallback_passes: int = 0
    iterations: List[Dict] = field(default_factory=list)
    max_exponent: int = 0
    max_bits_used: int = 0
    bit_budget: int = 0

    def summary(self) -> Dict:
        return {
            'mis': sorted(self.independent_set),
            'outer_iterations': self.outer_iterations,
            'fallback_passes': self.fallback_passes,
            'iterations': self.iterations,
        }


def low_degree_extract(g_residual: Graph, delta: int,
                       active: Optional[Set[int]] = None) -> Tuple[FrozenSet[int], Graph]:
    """Active vertices with at most `delta` active neighbors, and the graph they induce"""
    active = set(range(g_residual.n)) if active is None else active
    low = frozenset(
        v for v in active
        if sum(1 for w in g_residual.adjacency[v] if w in active) <= delta
    )
    return low, g_residual.induced(low)


def mis_labels(vertices: Set[int], n: int, bit_count: int, rng) -> List[Optional[VertexLabel]]:
    """bit_count fresh random bits for each listed vertex, no label elsewhere"""
    ordered = sorted(vertices)
    bits = rng.integers(0, 2, size=(len(ordered), bit_count))
    labels: List[Optional[VertexLabel]] = [None] * n
    for v, row in zip(ordered, bits):
        labels[v] = VertexLabel(bits=tuple(int(b) for b in row))
    return labels


class ArboricityMis:
    """Outer loop of the bounded-arboricity MIS on one MPC run"""

    def __init__(self, run: MpcRun, g: Graph, params: ArbMisParams):
        self.run = run
        self.g = g
        self.params = params
        self.gamma = params.resolve_gamma(g.n)
        self.delta = 2 * params.alpha * self.gamma
        self.independent: Set[int] = set()
        self.undecided: Set[int] = set(range(g.n))
        self.result = MisResult(frozenset())

    def check_arboricity(self) -> None:
        observed = degeneracy(self.g)
        if observed > 2 * self.params.alpha - 1:
            logger.warning(
                f"Degeneracy {observed} exceeds 2*alpha-1={2 * self.params.alpha - 1}; "
                f"alpha={self.params.alpha} is not an arboricity bound for this graph"
            )
        logger.info(f"gamma={self.gamma}, alpha={self.params.alpha}, gamma/alpha={self.gamma / self.params.alpha:g}")

    def _run_local(self, vertices: FrozenSet[int], induced: Graph, max_degree: int, compressed: bool) -> LocalOutput:
        algorithm = LocalMis(max_degree, self.params.mis_round_budget_constant)
        labels = mis_labels(set(vertices), self.g.n, algorithm.label_bits, self.run.rng_stream)
        labeled = LabeledMultigraph.from_graph(induced, labels, d=max(max_degree, induced.max_degree))
        self.result.bit_budget = max(self.result.bit_budget, algorithm.label_bits)
        with self.run.section("mis"):
            if compressed:
                return round_compression(self.run, labeled, algorithm)
            return direct_local_rounds(self.run, labeled, algorithm)

    def _apply(self, vertices: FrozenSet[int], outputs: LocalOutput) -> Dict:
        new_members = set()
        decided = set()
        for v in vertices:
            status, max_exponent, bits_used = outputs[v]
            self.result.max_exponent = max(self.result.max_exponent, max_exponent)
            self.result.max_bits_used = max(self.result.max_bits_used, bits_used)
            if status == IN_MIS:
                new_members.add(v)
            if status != UNDECIDED:
                decided.add(v)
        # only the new members' neighbors can still be undecided
        neighbors = {w for v in new_members for w in self.g.adjacency[v]} & self.undecided
        before = len(self.undecided)
        removed = decided | neighbors
        self.independent |= new_members
        self.undecided -= removed
        with self.run.section("mis"):
            self.run.drop_vertices(removed)
        return {
            'U': before,
            'U_prime': len(vertices),
            'undecided_in_U_prime': len(vertices) - len(decided),
            'joined': len(new_members),
            'U_next': len(self.undecided),
            'shrink_ok': len(self.undecided) <= before / self.gamma,
        }

    def outer_iteration_cap(self) -> int:
        """ceil(log_gamma n) + EXTRA_OUTER_PASSES, with the logarithm taken exactly"""
        levels = 0
        while self.gamma ** levels < self.g.n:
            levels += 1
        return levels + EXTRA_OUTER_PASSES

    def solve(self) -> MisResult:
        self.check_arboricity()
        compressed = self.params.simulation == 'compressed'
        cap = self.outer_iteration_cap()
        while self.undecided and self.result.outer_iterations < cap:
            self.result.outer_iterations += 1
            low, induced = low_degree_extract(self.g, self.delta, self.undecided)
            if not low:
                break
            outputs = self._run_local(low, induced, self.delta, compressed)
            record = self._apply(low, outputs)
            self.result.iterations.append(record)
            logger.info(
                f"Outer iteration {self.result.outer_iterations}: |U|={record['U']}, |U'|={record['U_prime']}, "
                f"undecided {record['undecided_in_U_prime']}, |U_next|={record['U_next']}"
            )

        # direct, uncompressed passes on the whole residual until every vertex is decided
        while self.undecided:
            if self.result.fallback_passes == MAX_FALLBACK_PASSES:
                raise IncompletenessError(
                    f"{len(self.undecided)} vertices still undecided after {MAX_FALLBACK_PASSES} fallback passes"
                )
            self.result.fallback_passes += 1
            low = frozenset(self.undecided)
            induced = self.g.induced(low)
            logger.warning(f"Fallback pass {self.result.fallback_passes} on {len(low)} undecided vertices")
            outputs = self._run_local(low, induced, max(1, induced.max_degree), compressed=False)
            self.result.iterations.append({**self._apply(low, outputs), 'fallback': True})

        self.result.independent_set = frozenset(self.independent)
        return self.result


def arboricity_mis(run: MpcRun, g: Graph, params: ArbMisParams) -> FrozenSet[int]:
    """A maximal independent set of g"""
    return ArboricityMis(run, g, params).solve().independent_set


def run_mis(g: Graph, params: ArbMisParams) -> Tuple[MisResult, MpcRun]:
    """arboricity_mis on a fresh run sized for g, with the full iteration record"""
    cfg = MpcConfig.for_graph(g, delta=params.delta, seed=params.seed,
                              primitive_round_cost=params.primitive_round_cost)
    run = init_run(g, cfg)
    logger.info(f"Arboricity MIS on n={g.n}, m={g.m}: alpha={params.alpha}, simulation={params.simulation}")
    return ArboricityMis(run, g, params).solve(), run
