"""
MatchMPC
Constant-factor matching and vertex cover: sample a sparse labeled multigraph,
run k' peeling phases on it through round compression, repeat while the
threshold is large, then finish with direct peeling
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Literal, Optional, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from compression.round_compression import direct_local_rounds, round_compression
from graphs.graph_core import Edge, EdgeLabel, Graph, LabeledMultigraph, VertexLabel
from matching.local_peeling import LocalPeeling, decode_peeling
from matching.peeling import PeelingOutput, mpc_global_peeling
from mpc.errors import InputError
from mpc.simulator import MpcConfig, MpcRun, init_run

logger = logging.getLogger(__name__)


def log2n(n: int) -> float:
    return math.log2(n) if n > 1 else 0.0


def auto_k(n: int) -> int:
    """k = sqrt(log n / log log n), at least 2"""
    log_n = log2n(n)
    if log_n <= 2:
        return 2
    return max(2, round(math.sqrt(log_n / math.log2(log_n))))


class MatchMpcParams(BaseModel):
    """Parameters of one MatchMPC run"""
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    k: Union[int, Literal['auto']] = 'auto'
    lam: float = Field(default=32, ge=2, alias='lambda')
    rho_max: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    delta: float = Field(default=0.5, gt=0, lt=1)
    primitive_round_cost: int = Field(default=1, ge=1)
    simulation: Literal['compressed', 'direct'] = 'compressed'

    @field_validator('k')
    @classmethod
    def check_k(cls, value):
        if value != 'auto' and value < 2:
            raise ValueError(f"k must be at least 2, got {value}")
        return value

    def resolve_k(self, n: int) -> int:
        return auto_k(n) if self.k == 'auto' else int(self.k)

    def resolve_rho_max(self, n: int) -> int:
        return self.rho_max if self.rho_max is not None else 1000 * max(n, 1) ** 3

    def with_seed(self, seed: int) -> 'MatchMpcParams':
        return self.model_copy(update={'seed': seed})


def sampling_probability(delta: float, k_prime: int, lam: float, log_n: float) -> Tuple[float, bool]:
    """(min(1, 2^k' * lambda * log n / delta), whether the clamp applied)"""
    raw = 2 ** k_prime * lam * log_n / delta
    return min(1.0, raw), raw > 1


def sampled_degree_bound(k_prime: int, lam: float, log_n: float) -> float:
    return 4 * k_prime * 2 ** k_prime * lam * log_n


def build_sampled_multigraph(g_residual: Graph, delta: float, k_prime: int, lam: float,
                             rho_max: int, rng: np.random.Generator,
                             log_n: Optional[float] = None) -> LabeledMultigraph:
    """k' independent edge samples, one per phase, with fresh rho draws and color bits.

    Every residual edge enters phase i with the sampling probability and the
    label (i, rho_u, rho_v); every vertex gets one color bit per phase.
    """
    log_n = log2n(g_residual.n) if log_n is None else log_n
    if delta <= lam ** 2 * log_n:
        raise InputError(f"Sampling needs delta > lambda^2 log n = {lam ** 2 * log_n:g}, got {delta:g}")
    p, clamped = sampling_probability(delta, k_prime, lam, log_n)
    if clamped:
        logger.warning(f"Sampling probability clamped to 1 (delta={delta:g}, k'={k_prime}, lambda={lam:g})")

    edges = np.array(g_residual.sorted_edges, dtype=np.int64).reshape(-1, 2)
    labeled = []
    for phase in range(1, k_prime + 1):
        keep = rng.random(len(edges)) < p
        rho = rng.integers(0, rho_max + 1, size=(len(edges), 2))
        for index in np.flatnonzero(keep):
            u, v = edges[index]
            labeled.append((int(u), int(v), EdgeLabel(phase, int(rho[index, 0]), int(rho[index, 1]))))
    colors = rng.integers(0, 2, size=(g_residual.n, k_prime))
    labels = [VertexLabel(color_bits=tuple(int(bit) for bit in row)) for row in colors]
    return LabeledMultigraph.build(g_residual.n, labeled, labels)


def match_mpc(run: MpcRun, g: Graph, params: MatchMpcParams) -> PeelingOutput:
    """Matching and cover of g; rounds are charged to `run` by section"""
    n = g.n
    log_n = log2n(n)
    k = params.resolve_k(n)
    lam = params.lam
    rho_max = params.resolve_rho_max(n)
    guard = lam ** 2 * log_n
    rng = run.rng_stream
    logger.info(f"MatchMPC on n={n}, m={g.m}: k={k}, lambda={lam:g}, simulation={params.simulation}")

    alive: Set[int] = set(range(n))
    result = PeelingOutput()
    delta = float(n)
    while n > 1 and delta > guard:
        residual = g.induced(alive)
        k_prime = min(k, math.ceil(math.log2(delta / guard)))
        p, clamped = sampling_probability(delta, k_prime, lam, log_n)
        sampled = build_sampled_multigraph(residual, delta, k_prime, lam, rho_max, rng, log_n=log_n)
        algorithm = LocalPeeling(k_prime, lam, log_n, max(2, sampled.d))
        if params.simulation == 'compressed':
            outputs = round_compression(run, sampled, algorithm)
        else:
            outputs = direct_local_rounds(run, sampled, algorithm)
        part = decode_peeling(outputs, algorithm, sampled)

        with run.section("cover_removal"):
            run.drop_vertices(part.cover)
        alive -= part.cover
        start_delta = delta
        delta /= 2 ** k_prime
        residual_max = g.induced(alive).max_degree
        violated = residual_max > 2 * delta
        if violated:
            logger.warning(f"Residual max degree {residual_max} exceeds 2*delta={2 * delta:g}")
        part.iterations.append({
            'delta': start_delta,
            'k_prime': k_prime,
            'p': p,
            'clamped': clamped,
            'sampled_max_degree': sampled.max_degree,
            'sampled_degree_bound': sampled_degree_bound(k_prime, lam, log_n),
            'residual_max_degree': residual_max,
            'degree_violation': violated,
        })
        logger.info(
            f"Iteration {len(result.iterations) + 1}: delta={start_delta:g}, k'={k_prime}, p={p:.4g}, "
            f"|C'|={len(part.cover)}, residual max degree {residual_max}"
        )
        result = result.merge(part)

    if not result.iterations and n > 1:
        logger.info(
            f"Loop guard lambda^2 log n = {guard:g} is not below n={n}: "
            f"no compressed peeling, the whole run is global peeling"
        )

    tail_graph = g.induced(alive)
    # 2*delta bounds the residual degree only with high probability; a violation must not abort the tail
    tail = mpc_global_peeling(run, tail_graph, max(2 * delta, tail_graph.max_degree), rng)
    result = result.merge(tail)
    logger.info(f"MatchMPC done: |M|={len(result.matching)}, |C|={len(result.cover)}, rounds={run.stats.rounds_used}")
    return result


def config_for(g: Graph, params: MatchMpcParams) -> MpcConfig:
    return MpcConfig.for_graph(g, delta=params.delta, seed=params.seed,
                               primitive_round_cost=params.primitive_round_cost)


def run_match(g: Graph, params: MatchMpcParams) -> Tuple[PeelingOutput, MpcRun]:
    """match_mpc on a fresh run sized for g"""
    run = init_run(g, config_for(g, params))
    return match_mpc(run, g, params), run


def trial_seeds(seed: int, count: int) -> List[int]:
    """`seed` itself followed by count-1 independent seeds spawned from it"""
    spawned = np.random.SeedSequence(seed).spawn(max(0, count - 1))
    return [seed] + [int(child.generate_state(1)[0]) for child in spawned]


def trials_for(trials: Optional[int], fail_prob: Optional[float]) -> int:
    if trials is not None:
        if trials < 1:
            raise InputError(f"trials must be at least 1, got {trials}")
        return trials
    if fail_prob is None:
        return 1
    if not 0 < fail_prob < 1:
        raise InputError(f"fail_prob must lie in (0, 1), got {fail_prob}")
    return max(1, math.ceil(math.log2(1 / fail_prob)))


def best_of(g: Graph, params: MatchMpcParams, count: int,
            goal: Literal['matching', 'cover'] = 'matching') -> Tuple[PeelingOutput, MpcRun]:
    """The winning trial of `count` independent runs, with its run"""
    best: Optional[Tuple[PeelingOutput, MpcRun]] = None
    for seed in trial_seeds(params.seed, count):
        output, run = run_match(g, params.with_seed(seed))
        if best is None:
            best = output, run
        elif goal == 'matching' and len(output.matching) > len(best[0].matching):
            best = output, run
        elif goal == 'cover' and len(output.cover) < len(best[0].cover):
            best = output, run
    logger.info(f"Boosted over {count} trials: |M|={len(best[0].matching)}, |C|={len(best[0].cover)}")
    return best


def boost(g: Graph, params: MatchMpcParams, trials: Optional[int] = None,
          fail_prob: Optional[float] = None,
          goal: Literal['matching', 'cover'] = 'matching') -> PeelingOutput:
    """Best of independent runs: largest matching, or smallest cover"""
    output, _ = best_of(g, params, trials_for(trials, fail_prob), goal)
    return output


def repetitions_for(eps: float) -> int:
    if not 0 < eps < 1:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    return math.ceil(4 * math.log2(1 / eps))


@dataclass
class TwoPlusEpsOutput:
    """Accumulated matching, its cover, and every MatchMPC run that contributed"""
    matching: FrozenSet[Edge]
    cover: FrozenSet[int]
    runs: List[MpcRun] = field(default_factory=list)

    def stats(self) -> Dict:
        """Repetitions run one after another: rounds add up, space is the worst run's"""
        exported = [run.stats.to_dict() for run in self.runs]
        return {
            'rounds': sum(stats['rounds'] for stats in exported),
            'max_machine_words': max((stats['max_machine_words'] for stats in exported), default=0),
            'total_words': max((stats['total_words'] for stats in exported), default=0),
            'repetitions': len(self.runs),
        }


def two_plus_eps(g: Graph, params: MatchMpcParams, eps: float) -> TwoPlusEpsOutput:
    """Union of matchings on successively smaller unmatched residuals, plus a cover.

    The cover is the endpoints of that matching together with one more
    MatchMPC cover of whatever residual edges remain.
    """
    alive = set(range(g.n))
    matching: Set[Edge] = set()
    runs: List[MpcRun] = []
    for repetition, seed in enumerate(trial_seeds(params.seed, repetitions_for(eps))):
        residual = g.induced(alive)
        if residual.m == 0:
            logger.info(f"Residual graph empty after {repetition} repetitions")
            break
        output, run = run_match(residual, params.with_seed(seed))
        runs.append(run)
        matching |= output.matching
        alive -= output.matched_vertices
    cover = {v for edge in matching for v in edge}
    residual = g.induced(alive)
    if residual.m:
        output, run = run_match(residual, params)
        runs.append(run)
        cover |= output.cover
    return TwoPlusEpsOutput(frozenset(matching), frozenset(cover), runs)


def two_plus_eps_matching(g: Graph, params: MatchMpcParams, eps: float) -> FrozenSet[Edge]:
    return two_plus_eps(g, params, eps).matching


def two_plus_eps_cover(g: Graph, params: MatchMpcParams, eps: float) -> FrozenSet[int]:
    return two_plus_eps(g, params, eps).cover


def stats_summary(output: PeelingOutput, run: MpcRun) -> Dict:
    """JSON payload of a single match run"""
    stats = run.stats.to_dict()
    return {
        'matching': [list(edge) for edge in sorted(output.matching)],
        'cover': sorted(output.cover),
        'rounds': stats['rounds'],
        'max_machine_words': stats['max_machine_words'],
        'total_words': stats['total_words'],
        'rounds_by_section': dict(sorted(run.stats.rounds_by_section.items())),
        # 0 when lambda^2 log n >= n, e.g. the default lambda on any n up to 2^13
        'compressed_iterations': len(output.iterations),
        'space_raises': len(run.stats.space_raises),
        'phase_trace_summary': output.summary(),
    }
