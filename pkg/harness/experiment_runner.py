"""
Experiment Runner
Expands an experiment spec into (parameter point, seed) runs, executes each
one, validates its output and writes one result row per run
"""

import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from compression.round_compression import round_compression
from graphs.graph_core import Graph, LabeledMultigraph, VertexLabel, read_graph
from harness.generators import GeneratorSpec, generate
from localmodel.algorithms import LabelDigestAlgorithm, MaxIdWithinRadius
from localmodel.local_model import simulate_local_direct
from matching.match_mpc import (
    MatchMpcParams,
    best_of,
    config_for,
    run_match,
    two_plus_eps,
)
from matching.peeling import mpc_global_peeling
from mis.arboricity_mis import ArbMisParams, run_mis
from mpc.errors import MpcError
from mpc.simulator import MpcConfig, MpcRun, init_run
from qa.validation_system import SolutionValidator

logger = logging.getLogger(__name__)

GRID_KEYS = ('n', 'k', 'lambda', 'gamma', 'alpha', 'delta', 'eps', 't')

RESULT_COLUMNS = [
    'n', 'm', 'k', 'lambda', 'gamma', 'delta', 'seed',
    'rounds', 'max_machine_words', 'total_words',
    'matching_size', 'cover_size', 'mis_size',
    'oracle_matching', 'oracle_cover', 'valid', 'wall_ms', 'error',
]

LOCAL_DEMOS = {
    'max-id': MaxIdWithinRadius,
    'digest': LabelDigestAlgorithm,
}

DEMO_LABEL_BITS = 8


class ExperimentSpec(BaseModel):
    """One sweep: an algorithm, a graph source, a parameter grid and seeds"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    name: str = 'experiment'
    algorithm: Literal['match', 'mis', 'peel-direct', 'compress-demo']
    generator: Optional[GeneratorSpec] = None
    input: Optional[str] = None
    grid: Dict[str, List[Union[int, float, str]]] = Field(default_factory=dict)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    simulation: Literal['compressed', 'direct'] = 'compressed'
    trials: Optional[int] = Field(default=None, ge=1)
    local_algorithm: Literal['max-id', 'digest'] = 'max-id'
    with_oracles: bool = True
    record_timing: bool = False
    workers: int = Field(default=1, ge=1)
    output: Optional[str] = None

    @field_validator('grid')
    @classmethod
    def check_grid_keys(cls, grid):
        unknown = set(grid) - set(GRID_KEYS)
        if unknown:
            raise ValueError(f"Unknown grid keys {sorted(unknown)}; allowed: {list(GRID_KEYS)}")
        for key, values in grid.items():
            if not values:
                raise ValueError(f"Grid key {key!r} has no values")
        return grid

    @field_validator('seeds')
    @classmethod
    def check_seeds(cls, seeds):
        if any(seed < 0 for seed in seeds):
            raise ValueError("Seeds must be non-negative")
        return seeds

    @model_validator(mode='after')
    def check_source(self) -> 'ExperimentSpec':
        if (self.generator is None) == (self.input is None):
            raise ValueError("Exactly one of 'generator' and 'input' must be given")
        if 'n' in self.grid and self.generator is None:
            raise ValueError("Grid key 'n' needs a generator")
        return self

    def points(self) -> List[Dict[str, Any]]:
        """Grid points in a fixed order: keys by GRID_KEYS, values as listed"""
        keys = [key for key in GRID_KEYS if key in self.grid]
        return [dict(zip(keys, values)) for values in itertools.product(*(self.grid[key] for key in keys))]

    def tasks(self) -> List[Tuple[Dict[str, Any], int]]:
        return [(point, seed) for point in self.points() for seed in self.seeds]


def load_experiment_spec(path: Union[str, Path]) -> ExperimentSpec:
    return ExperimentSpec.model_validate_json(Path(path).read_text())


def _params(model, point: Dict[str, Any], keys: Tuple[str, ...], **fixed):
    values = dict(fixed)
    values.update({key: point[key] for key in keys if key in point})
    return model.model_validate(values)


def match_params_for(point: Dict[str, Any], seed: int, simulation: str = 'compressed') -> MatchMpcParams:
    return _params(MatchMpcParams, point, ('k', 'lambda', 'delta'), seed=seed, simulation=simulation)


def mis_params_for(point: Dict[str, Any], seed: int, simulation: str = 'compressed') -> ArbMisParams:
    return _params(ArbMisParams, point, ('alpha', 'gamma', 'delta'), seed=seed, simulation=simulation)


def demo_labels(n: int, seed: int) -> List[VertexLabel]:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    bits = rng.integers(0, 2, size=(n, DEMO_LABEL_BITS))
    return [VertexLabel(bits=tuple(int(b) for b in row)) for row in bits]


def compress_demo(g: Graph, t: int, local_algorithm: str = 'max-id', delta: float = 0.5,
                  seed: int = 0, primitive_round_cost: int = 1) -> Tuple[Dict, MpcRun]:
    """Run a t-round demo algorithm compressed and directly; report the plan and whether they agree"""
    labeled = LabeledMultigraph.from_graph(g, demo_labels(g.n, seed))
    algorithm = LOCAL_DEMOS[local_algorithm](t)
    run = init_run(g, MpcConfig.for_graph(g, delta=delta, seed=seed,
                                          primitive_round_cost=primitive_round_cost))
    compressed = round_compression(run, labeled, algorithm)
    direct = simulate_local_direct(labeled, algorithm)
    report = run.stats.compression_reports[-1]
    summary = {
        'algorithm': local_algorithm,
        't': t,
        'outputs_match': compressed.outputs == direct.outputs,
        'radius_schedule': list(report['plan']['radius_schedule']),
        's_star': report['plan']['s_star'],
        'per_vertex_peak_words': report['per_vertex_peak_words'],
        'machine_peak_words': report['machine_peak_words'],
        'space_raised': report['space_raised'],
        'compression_rounds': report['rounds'],
        **run.stats.to_dict(),
    }
    return summary, run


class ExperimentRunner:
    """Extract graphs, run and validate every task, load rows into a table"""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.validator = SolutionValidator()
        self._graphs: Dict[Optional[int], Graph] = {}

    def extract_graph(self, point: Dict[str, Any]) -> Graph:
        n = point.get('n')
        if n not in self._graphs:
            if self.spec.input is not None:
                self._graphs[n] = read_graph(self.spec.input)
            elif n is None:
                self._graphs[n] = generate(self.spec.generator)
            else:
                self._graphs[n] = generate(self.spec.generator.with_n(int(n)))
        return self._graphs[n]

    def run_task(self, point: Dict[str, Any], seed: int) -> Dict[str, Any]:
        """One result row; algorithm and parameter errors are recorded, not raised"""
        row: Dict[str, Any] = {column: None for column in RESULT_COLUMNS}
        row['seed'] = seed
        row['delta'] = point.get('delta', 0.5)
        start = time.perf_counter()
        try:
            g = self.extract_graph(point)
            row.update(n=g.n, m=g.m)
            self.transform(g, point, seed, row)
        except (MpcError, ValidationError) as e:
            row['valid'] = False
            row['error'] = " ".join(f"{type(e).__name__}: {e}".split())
            logger.warning(f"Run {point} seed={seed} failed: {row['error']}")
        if self.spec.record_timing:
            row['wall_ms'] = round((time.perf_counter() - start) * 1000, 3)
        return row

    def transform(self, g: Graph, point: Dict[str, Any], seed: int, row: Dict[str, Any]) -> None:
        run_id = f"{self.spec.name}:{point}:{seed}"
        algorithm = self.spec.algorithm
        if algorithm in ('match', 'peel-direct'):
            params = match_params_for(point, seed, self.spec.simulation)
            run = None
            if algorithm == 'peel-direct':
                run = init_run(g, config_for(g, params))
                output = mpc_global_peeling(run, g, max(1, g.max_degree))
                matching, cover = output.matching, output.cover
            else:
                row.update(k=params.resolve_k(g.n), **{'lambda': params.lam})
                if 'eps' in point:
                    accumulated = two_plus_eps(g, params, float(point['eps']))
                    matching, cover = accumulated.matching, accumulated.cover
                    stats = accumulated.stats()
                    row.update(rounds=stats['rounds'], max_machine_words=stats['max_machine_words'],
                               total_words=stats['total_words'])
                elif self.spec.trials is not None:
                    output, run = best_of(g, params, self.spec.trials)
                    matching, cover = output.matching, output.cover
                else:
                    output, run = run_match(g, params)
                    matching, cover = output.matching, output.cover
            result = self.validator.validate_matching_output(g, matching, cover, run_id,
                                                             with_oracles=self.spec.with_oracles)
            row.update(matching_size=len(matching), cover_size=len(cover),
                       oracle_matching=result['oracle_matching'], oracle_cover=result['oracle_cover'],
                       valid=result['valid'])
        elif algorithm == 'mis':
            params = mis_params_for(point, seed, self.spec.simulation)
            row['gamma'] = params.resolve_gamma(g.n)
            mis_result, run = run_mis(g, params)
            result = self.validator.validate_mis_output(g, mis_result.independent_set, run_id)
            row.update(mis_size=len(mis_result.independent_set), valid=result['valid'])
        else:
            summary, run = compress_demo(g, int(point.get('t', 4)), self.spec.local_algorithm,
                                         delta=float(row['delta']), seed=seed)
            row['valid'] = summary['outputs_match']
            if not row['valid']:
                row['error'] = "Compressed outputs differ from direct simulation"
        if run is not None:
            stats = run.stats.to_dict()
            row.update(rounds=stats['rounds'], max_machine_words=stats['max_machine_words'],
                       total_words=stats['total_words'])

    def run(self) -> pd.DataFrame:
        tasks = self.spec.tasks()
        logger.info(f"Experiment {self.spec.name!r}: {self.spec.algorithm}, {len(tasks)} runs")
        if self.spec.workers > 1:
            with ProcessPoolExecutor(max_workers=self.spec.workers) as pool:
                rows = list(pool.map(_run_one, [(self.spec, point, seed) for point, seed in tasks]))
        else:
            rows = [self.run_task(point, seed) for point, seed in tasks]
        results = pd.DataFrame(rows, columns=RESULT_COLUMNS, dtype=object)
        invalid = int((results['valid'] != True).sum())  # noqa: E712
        logger.info(f"Experiment {self.spec.name!r} done: {len(results) - invalid}/{len(results)} valid")
        return results

    def load_results(self, results: pd.DataFrame, path: Union[str, Path],
                     output_format: str = 'csv') -> Path:
        path = Path(path)
        if path.parent != Path('.'):
            path.parent.mkdir(parents=True, exist_ok=True)
        if output_format == 'json':
            records = [{column: row[column] for column in RESULT_COLUMNS}
                       for row in results.to_dict(orient='records')]
            path.write_text(json.dumps(records, indent=2) + "\n")
        else:
            results.to_csv(path, index=False)
        logger.info(f"Wrote {len(results)} rows to {path}")
        return path


def _run_one(task: Tuple[ExperimentSpec, Dict[str, Any], int]) -> Dict[str, Any]:
    spec, point, seed = task
    return ExperimentRunner(spec).run_task(point, seed)


def run_experiment(spec: ExperimentSpec, out: Optional[Union[str, Path]] = None,
                   output_format: str = 'csv') -> pd.DataFrame:
    """Run every (point, seed) of spec in order; write the table when a path is known"""
    runner = ExperimentRunner(spec)
    results = runner.run()
    target = out if out is not None else spec.output
    if target is not None:
        runner.load_results(results, target, output_format)
    return results


def summarize_results(results: pd.DataFrame) -> pd.DataFrame:
    """Median rounds and sizes per parameter point, with the share of valid rows"""
    table = results.copy()
    numeric = ['rounds', 'max_machine_words', 'matching_size', 'cover_size', 'mis_size']
    for column in numeric:
        table[column] = pd.to_numeric(table[column], errors='coerce')
    table['valid'] = table['valid'] == True  # noqa: E712
    keys = ['n', 'k', 'lambda', 'gamma', 'delta']
    grouped = table.groupby(keys, dropna=False, sort=False)
    summary = grouped[numeric].median()
    summary['valid_share'] = grouped['valid'].mean()
    summary['runs'] = grouped.size()
    return summary.reset_index()
