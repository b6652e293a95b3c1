"""
Exact Oracles and Validity Checkers
Brute-force maximum matching and minimum vertex cover for small graphs, the
matching / cover / MIS definitions as checks, and degeneracy by peeling
"""

import heapq
import logging
import time
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

from pydantic import BaseModel, Field

from graphs.graph_core import Edge, Graph, normalize_edge
from mpc.errors import BudgetExceeded

logger = logging.getLogger(__name__)


class OracleBudget(BaseModel):
    """Largest inputs the exact solvers accept, and a per-instance time limit"""
    max_n_exact_matching: int = Field(default=22, ge=0)
    max_n_exact_cover: int = Field(default=40, ge=0)
    timeout_s: float = Field(default=60.0, gt=0)


DEFAULT_BUDGET = OracleBudget()


class _Deadline:
    def __init__(self, seconds: float, what: str):
        self.expires = time.monotonic() + seconds
        self.what = what

    def check(self) -> None:
        if time.monotonic() > self.expires:
            raise BudgetExceeded(f"{self.what} exceeded its time budget")


def max_matching_exact(g: Graph, budget: OracleBudget = DEFAULT_BUDGET) -> Tuple[int, FrozenSet[Edge]]:
    """Maximum matching size and a witness, by search over remaining-vertex masks"""
    if g.n > budget.max_n_exact_matching:
        raise BudgetExceeded(f"Exact matching is limited to n <= {budget.max_n_exact_matching}, got n={g.n}")
    deadline = _Deadline(budget.timeout_s, "Exact matching")
    neighbor_mask = [0] * g.n
    for u, v in g.sorted_edges:
        neighbor_mask[u] |= 1 << v
        neighbor_mask[v] |= 1 << u

    @lru_cache(maxsize=None)
    def best(mask: int) -> Tuple[int, Tuple[Edge, ...]]:
        # the lowest remaining vertex is either unmatched or matched to a remaining neighbor
        if mask == 0:
            return 0, ()
        deadline.check()
        low = mask & -mask
        v = low.bit_length() - 1
        rest = mask ^ low
        size, pairs = best(rest)
        options = neighbor_mask[v] & rest
        while options:
            bit = options & -options
            options ^= bit
            u = bit.bit_length() - 1
            sub_size, sub_pairs = best(rest ^ bit)
            if sub_size + 1 > size:
                size, pairs = sub_size + 1, ((v, u),) + sub_pairs
        return size, pairs

    start = 0
    for v in range(g.n):
        if neighbor_mask[v]:
            start |= 1 << v
    size, pairs = best(start)
    return size, frozenset(normalize_edge(u, v) for u, v in pairs)


def _greedy_matching_size(edges: Iterable[Edge]) -> int:
    used: Set[int] = set()
    size = 0
    for u, v in edges:
        if u not in used and v not in used:
            used.update((u, v))
            size += 1
    return size


def min_vertex_cover_exact(g: Graph, budget: OracleBudget = DEFAULT_BUDGET) -> Tuple[int, FrozenSet[int]]:
    """Minimum vertex cover size and a witness, by branch and bound on uncovered edges"""
    if g.n > budget.max_n_exact_cover:
        raise BudgetExceeded(f"Exact cover is limited to n <= {budget.max_n_exact_cover}, got n={g.n}")
    deadline = _Deadline(budget.timeout_s, "Exact cover")
    best_cover: Set[int] = {v for edge in g.sorted_edges for v in edge}

    def branch(edges: List[Edge], chosen: Set[int]) -> None:
        nonlocal best_cover
        deadline.check()
        if not edges:
            if len(chosen) < len(best_cover):
                best_cover = set(chosen)
            return
        # a maximal matching of what is left is a lower bound on what it still costs
        if len(chosen) + _greedy_matching_size(edges) >= len(best_cover):
            return
        u, v = edges[0]
        for pick in (u, v):
            chosen.add(pick)
            branch([e for e in edges if pick not in e], chosen)
            chosen.discard(pick)

    branch(list(g.sorted_edges), set())
    return len(best_cover), frozenset(best_cover)


def check_matching(g: Graph, matching: Iterable[Tuple[int, int]]) -> bool:
    used: Set[int] = set()
    for u, v in matching:
        if normalize_edge(u, v) not in g.edges:
            return False
        if u in used or v in used:
            return False
        used.update((u, v))
    return True


def check_cover(g: Graph, cover: Iterable[int]) -> bool:
    chosen = set(cover)
    if any(not 0 <= v < g.n for v in chosen):
        return False
    return all(u in chosen or v in chosen for u, v in g.edges)


def check_mis(g: Graph, independent: Iterable[int]) -> bool:
    """Independent and maximal: every vertex outside the set has a neighbor in it"""
    chosen = set(independent)
    if any(not 0 <= v < g.n for v in chosen):
        return False
    if any(u in chosen and v in chosen for u, v in g.edges):
        return False
    return all(v in chosen or any(w in chosen for w in g.adjacency[v]) for v in range(g.n))


def degeneracy(g: Graph, vertices: Optional[Iterable[int]] = None) -> int:
    """Largest minimum degree seen while repeatedly deleting a minimum-degree vertex"""
    active = set(range(g.n)) if vertices is None else set(vertices)
    degree = {v: sum(1 for w in g.adjacency[v] if w in active) for v in active}
    heap = [(d, v) for v, d in degree.items()]
    heapq.heapify(heap)
    removed: Set[int] = set()
    result = 0
    while heap:
        d, v = heapq.heappop(heap)
        if v in removed or d != degree[v]:
            continue
        result = max(result, d)
        removed.add(v)
        for w in g.adjacency[v]:
            if w in active and w not in removed:
                degree[w] -= 1
                heapq.heappush(heap, (degree[w], w))
    return result
