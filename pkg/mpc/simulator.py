"""
MPC Model Simulator
M machines with S words each, synchronous rounds of local computation followed
by addressed messages, with hard space limits and exact round counting
"""

import json
import logging
import math
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from graphs.graph_core import Graph
from graphs.words import count_words
from mpc.errors import CapacityError, InputError, SpaceExceeded

logger = logging.getLogger(__name__)


class Message(NamedTuple):
    """A payload addressed to a single machine"""
    dest: int
    payload: Any

    def word_size(self) -> int:
        return count_words(self.payload)


class MpcConfig(BaseModel):
    """Machine count M, words per machine S and round-charging conventions"""
    n: int = Field(ge=0)
    delta: float = Field(gt=0, lt=1)
    S: int = Field(ge=1)
    M: int = Field(ge=1)
    total_space_budget: int = Field(ge=0)
    primitive_round_cost: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @model_validator(mode='after')
    def check_space(self) -> 'MpcConfig':
        if self.S < math.ceil(self.n ** self.delta):
            raise ValueError(f"S={self.S} is below ceil(n^delta)={math.ceil(self.n ** self.delta)}")
        if self.M * self.S < self.total_space_budget:
            raise ValueError(f"M*S={self.M * self.S} does not cover the input of {self.total_space_budget} words")
        return self

    @classmethod
    def for_graph(cls, g: Graph, delta: float = 0.5, seed: int = 0,
                  primitive_round_cost: int = 1, machines: Optional[int] = None) -> 'MpcConfig':
        """Default sizing: S = ceil(n^delta), M = 2*ceil(needed / S).

        The words needed are those of the largest working set the graph
        algorithms keep: both directions of every edge with one annotation
        word each, plus one record per vertex.
        """
        S = max(2, math.ceil(g.n ** delta))
        needed = 6 * g.m + g.n
        M = machines if machines is not None else max(1, 2 * math.ceil(needed / S))
        return cls(n=g.n, delta=delta, S=S, M=M, total_space_budget=needed,
                   primitive_round_cost=primitive_round_cost, seed=seed)


@dataclass
class Machine:
    """One machine: word-counted storage plus last round's traffic"""
    id: int
    storage: List[Any] = field(default_factory=list)
    outbox: List[Message] = field(default_factory=list)
    inbox: List[Message] = field(default_factory=list)

    def words(self) -> int:
        return count_words(self.storage)


@dataclass
class RoundStats:
    """Cumulative round and space statistics of a run"""
    rounds_used: int = 0
    peak_words_per_round: List[int] = field(default_factory=list)
    total_words: int = 0
    primitive_invocations: Counter = field(default_factory=Counter)
    rounds_by_section: Counter = field(default_factory=Counter)
    space_raises: List[Dict] = field(default_factory=list)
    compression_reports: List[Dict] = field(default_factory=list)

    @property
    def max_machine_words(self) -> int:
        return max(self.peak_words_per_round, default=0)

    def to_dict(self) -> Dict:
        return {
            'rounds': self.rounds_used,
            'max_machine_words': self.max_machine_words,
            'total_words': self.total_words,
            'primitives': {
                'sort': self.primitive_invocations.get('sort', 0),
                'prefix_sum': self.primitive_invocations.get('prefix_sum', 0),
                'max': self.primitive_invocations.get('max', 0),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# step(machine_id, storage, inbox, rng) -> (new storage, outbox)
MachineStep = Callable[[int, List[Any], List[Message], np.random.Generator], Tuple[List[Any], List[Message]]]


class MpcRun:
    """Simulated machines, their traffic and the run's statistics"""

    def __init__(self, config: MpcConfig):
        self.config = config
        self.space_limit = config.S
        self.machines = [Machine(i) for i in range(config.M)]
        self.stats = RoundStats()
        self.rng_stream = np.random.default_rng(np.random.SeedSequence(config.seed))
        self._sections: List[str] = []

    @property
    def M(self) -> int:
        return len(self.machines)

    def machine_rng(self, machine_id: int) -> np.random.Generator:
        """Machine-local stream derived from (seed, machine, round)"""
        return np.random.default_rng(
            np.random.SeedSequence([self.config.seed, machine_id, self.stats.rounds_used])
        )

    @contextmanager
    def section(self, name: str) -> Iterator[None]:
        """Attribute the rounds charged inside the block to a named section"""
        self._sections.append(name)
        try:
            yield
        finally:
            self._sections.pop()

    def _charge(self, rounds: int) -> None:
        self.stats.rounds_used += rounds
        for name in set(self._sections):
            self.stats.rounds_by_section[name] += rounds

    def charge(self, rounds: int, reason: str) -> None:
        """Account rounds for work simulated outside exec_round"""
        if rounds < 0:
            raise InputError(f"Cannot charge {rounds} rounds")
        self._charge(rounds)
        logger.debug(f"Charged {rounds} rounds for {reason}")

    def _record_peak(self, per_machine: Sequence[int]) -> None:
        self.stats.peak_words_per_round.append(max(per_machine, default=0))
        total = sum(m.words() for m in self.machines)
        self.stats.total_words = max(self.stats.total_words, total)

    @contextmanager
    def borrow_machines(self, count: int, capacity: int, reason: str) -> Iterator[None]:
        """Swap in a temporary machine pool of the given size and capacity"""
        saved_machines, saved_limit = self.machines, self.space_limit
        if capacity > self.config.S:
            self.stats.space_raises.append({
                'reason': reason, 'S': self.config.S, 'raised_to': capacity, 'machines': count,
            })
            logger.info(f"Raising machine space from S={self.config.S} to {capacity} words for {reason}")
        self.machines = [Machine(i) for i in range(max(1, count))]
        self.space_limit = max(capacity, self.config.S)
        try:
            yield
        finally:
            self.machines, self.space_limit = saved_machines, saved_limit

    def load(self, records: Sequence[Any]) -> None:
        """Place records evenly on the machines, as the input distribution would"""
        total = count_words(list(records))
        if total > self.M * self.space_limit:
            raise CapacityError(f"{total} words exceed total space M*S={self.M * self.space_limit}")
        for machine, chunk in zip(self.machines, _even_split(records, self.M)):
            words = count_words(chunk)
            if words > self.space_limit:
                raise CapacityError(f"Machine {machine.id} would hold {words} words > S={self.space_limit}")
            machine.storage = chunk
            machine.outbox, machine.inbox = [], []

    def all_records(self) -> List[Any]:
        records: List[Any] = []
        for machine in self.machines:
            records.extend(machine.storage)
        return records

    def exec_round(self, step: MachineStep) -> 'MpcRun':
        """One synchronous round: local steps, space checks, routing, inbox checks"""
        S = self.space_limit
        results = []
        peaks = []
        for machine in self.machines:
            storage, outbox = step(machine.id, machine.storage, machine.inbox, self.machine_rng(machine.id))
            storage_words = count_words(storage)
            if storage_words > S:
                raise SpaceExceeded(machine.id, 'storage', storage_words, S)
            outbox_words = sum(msg.word_size() for msg in outbox)
            if outbox_words > S:
                raise SpaceExceeded(machine.id, 'outbox', outbox_words, S)
            for msg in outbox:
                if not 0 <= msg.dest < self.M:
                    raise InputError(f"Machine {machine.id} addressed nonexistent machine {msg.dest}")
            results.append((storage, list(outbox)))
            peaks.append(max(storage_words, outbox_words))

        # Routing is the serial merge point; sender order keeps it deterministic
        inboxes: List[List[Message]] = [[] for _ in self.machines]
        for storage, outbox in results:
            for msg in outbox:
                inboxes[msg.dest].append(msg)
        for machine_id, inbox in enumerate(inboxes):
            inbox_words = sum(msg.word_size() for msg in inbox)
            if inbox_words > S:
                raise SpaceExceeded(machine_id, 'inbox', inbox_words, S)
            peaks[machine_id] = max(peaks[machine_id], inbox_words)

        for machine, (storage, outbox), inbox in zip(self.machines, results, inboxes):
            machine.storage, machine.outbox, machine.inbox = storage, outbox, inbox
        self._charge(1)
        self._record_peak(peaks)
        logger.debug(f"Round {self.stats.rounds_used}: peak {max(peaks, default=0)} words")
        return self

    def _redistribute(self, records: List[Any]) -> None:
        total = count_words(records)
        if total > self.M * self.space_limit:
            raise CapacityError(f"{total} words exceed total space M*S={self.M * self.space_limit}")
        chunks = _even_split(records, self.M)
        for machine, chunk in zip(self.machines, chunks):
            words = count_words(chunk)
            if words > self.space_limit:
                raise CapacityError(f"Machine {machine.id} would hold {words} words > S={self.space_limit}")
        for machine, chunk in zip(self.machines, chunks):
            machine.storage = chunk
            machine.outbox, machine.inbox = [], []
        self._record_peak([count_words(m.storage) for m in self.machines])

    def primitive_sort(self, key: Callable[[Any], Any]) -> 'MpcRun':
        """Globally sort all records across machines, charged primitive_round_cost rounds"""
        records = sorted(self.all_records(), key=key)
        self._redistribute(records)
        self.stats.primitive_invocations['sort'] += 1
        self._charge(self.config.primitive_round_cost)
        return self

    def primitive_prefix_sum(self, value: Callable[[Any], int]) -> 'MpcRun':
        """Annotate each record with the inclusive prefix sum in global order"""
        running = 0
        annotated = []
        for record in self.all_records():
            running += value(record)
            annotated.append((record, running))
        self._redistribute(annotated)
        self.stats.primitive_invocations['prefix_sum'] += 1
        self._charge(self.config.primitive_round_cost)
        return self

    def primitive_max(self, value: Callable[[Any], int]) -> int:
        """Global maximum of value(record), known to every machine afterwards; 0 when empty"""
        result = max((value(record) for record in self.all_records()), default=0)
        self.stats.primitive_invocations['max'] += 1
        self._charge(self.config.primitive_round_cost)
        return result

    def drop_vertices(self, removed: Iterable[int]) -> 'MpcRun':
        """Drop every (u, v, ...) record touching a removed vertex; the join costs one sort"""
        gone = frozenset(removed)
        for machine in self.machines:
            machine.storage = [rec for rec in machine.storage if rec[0] not in gone and rec[1] not in gone]
        return self.primitive_sort(key=lambda rec: rec)


def _even_split(records: Sequence[Any], parts: int) -> List[List[Any]]:
    """Split into `parts` contiguous chunks whose sizes differ by at most one"""
    sizes = [len(chunk) for chunk in np.array_split(np.arange(len(records)), parts)]
    chunks, start = [], 0
    for size in sizes:
        chunks.append(list(records[start:start + size]))
        start += size
    return chunks


def init_run(g: Graph, cfg: MpcConfig) -> MpcRun:
    """Start a run with the edges of g spread evenly over the machines"""
    run = MpcRun(cfg)
    edge_words = 2 * g.m
    if edge_words > cfg.M * cfg.S:
        raise CapacityError(f"Input of {edge_words} words exceeds total space M*S={cfg.M * cfg.S}")
    run.load(list(g.sorted_edges))
    logger.info(f"Initialized MPC run: n={g.n}, m={g.m}, M={cfg.M}, S={cfg.S}")
    return run
