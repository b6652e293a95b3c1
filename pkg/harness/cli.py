"""
Command Line Interface
Subcommands generate, match, mis, peel-direct, compress-demo and sweep; JSON for
single runs, CSV for sweeps, exit codes by failure class
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

from graphs.graph_core import Graph, format_graph, parse_graph, read_graph
from harness.config import HarnessSettings, resolve_settings
from harness.experiment_runner import compress_demo, load_experiment_spec, run_experiment, summarize_results
from harness.generators import GeneratorSpec, generate
from matching.match_mpc import (
    best_of,
    config_for,
    run_match,
    stats_summary,
    trials_for,
    two_plus_eps,
)
from matching.peeling import mpc_global_peeling
from mis.arboricity_mis import run_mis
from mpc.errors import ContractViolation, InputError, MpcError, SpaceExceeded
from mpc.simulator import init_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_CONTRACT_VIOLATION = 2
EXIT_SPACE_VIOLATION = 3

GENERATOR_KINDS = ['gnp', 'tree', 'forest_union', 'grid', 'disjoint_matching', 'star', 'cycle', 'path']


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="key = value file; explicit flags override it")
    common.add_argument('--out', help="output path (stdout when omitted)")
    common.add_argument('--format', choices=['csv', 'json'])
    common.add_argument('--log-level')
    common.add_argument('--seed', type=int)
    common.add_argument('--delta', type=float, help="machine space S = n^delta")
    common.add_argument('--primitive-round-cost', type=int)
    common.add_argument('--simulation', choices=['compressed', 'direct'])
    return common


def _source_flags() -> argparse.ArgumentParser:
    source = argparse.ArgumentParser(add_help=False)
    source.add_argument('--input', help="graph file ('n m' then 'u v' lines); '-' reads stdin")
    source.add_argument('--kind', choices=GENERATOR_KINDS, help="generate the input instead")
    source.add_argument('--n', type=int)
    source.add_argument('--p', type=float)
    source.add_argument('--alpha', type=int)
    source.add_argument('--rows', type=int)
    source.add_argument('--cols', type=int)
    return source


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='run_mpc', description="MPC matching, vertex cover and MIS simulator")
    commands = parser.add_subparsers(dest='command', required=True)
    common, source = _common_flags(), _source_flags()

    commands.add_parser('generate', parents=[common, source], help="write a generated graph")

    match = commands.add_parser('match', parents=[common, source], help="MatchMPC matching and vertex cover")
    match.add_argument('--k')
    match.add_argument('--lambda', dest='lam', type=float)
    match.add_argument('--trials', type=int)
    match.add_argument('--fail-prob', type=float)
    match.add_argument('--eps', type=float)

    mis = commands.add_parser('mis', parents=[common, source], help="maximal independent set, bounded arboricity")
    mis.add_argument('--gamma')

    commands.add_parser('peel-direct', parents=[common, source], help="GlobalPeeling on the MPC machines")

    demo = commands.add_parser('compress-demo', parents=[common, source],
                               help="compressed vs direct simulation of a demo algorithm")
    demo.add_argument('--rounds', type=int, help="LOCAL rounds t of the demo algorithm")
    demo.add_argument('--local-algorithm', choices=['max-id', 'digest'])

    sweep = commands.add_parser('sweep', parents=[common], help="run an experiment spec (JSON)")
    sweep.add_argument('--spec', help="experiment spec file")
    sweep.add_argument('--record-timing', action='store_true', default=None)
    sweep.add_argument('--workers', type=int)
    return parser


def load_input_graph(settings: HarnessSettings) -> Graph:
    if settings.input is not None:
        if settings.input == '-':
            return parse_graph(sys.stdin.read())
        return read_graph(settings.input)
    if settings.kind is not None:
        return generate(generator_spec(settings))
    raise InputError("Give --input FILE, or --kind and --n to generate a graph")


def generator_spec(settings: HarnessSettings) -> GeneratorSpec:
    if settings.kind is None or settings.n is None:
        raise InputError("Generating a graph needs --kind and --n")
    values = {'kind': settings.kind, 'n': settings.n, 'seed': settings.seed, 'alpha': settings.alpha}
    for key in ('p', 'rows', 'cols'):
        if getattr(settings, key) is not None:
            values[key] = getattr(settings, key)
    return GeneratorSpec.model_validate(values)


def cmd_generate(settings: HarnessSettings) -> str:
    return format_graph(generate(generator_spec(settings)))


def cmd_match(settings: HarnessSettings) -> Dict:
    g = load_input_graph(settings)
    params = settings.match_params()
    if settings.eps is not None:
        result = two_plus_eps(g, params, settings.eps)
        return {
            'matching': [list(edge) for edge in sorted(result.matching)],
            'cover': sorted(result.cover),
            **result.stats(),
            'eps': settings.eps,
        }
    if settings.trials is not None or settings.fail_prob is not None:
        count = trials_for(settings.trials, settings.fail_prob)
        output, run = best_of(g, params, count)
        return {**stats_summary(output, run), 'trials': count}
    output, run = run_match(g, params)
    return stats_summary(output, run)


def cmd_mis(settings: HarnessSettings) -> Dict:
    g = load_input_graph(settings)
    result, run = run_mis(g, settings.mis_params())
    stats = run.stats.to_dict()
    return {
        'mis': sorted(result.independent_set),
        'outer_iterations': result.outer_iterations,
        'rounds': stats['rounds'],
        'max_machine_words': stats['max_machine_words'],
        'total_words': stats['total_words'],
        'fallback_passes': result.fallback_passes,
        'iterations': result.iterations,
    }


def cmd_peel_direct(settings: HarnessSettings) -> Dict:
    g = load_input_graph(settings)
    run = init_run(g, config_for(g, settings.match_params()))
    output = mpc_global_peeling(run, g, max(1, g.max_degree))
    return stats_summary(output, run)


def cmd_compress_demo(settings: HarnessSettings) -> Dict:
    g = load_input_graph(settings)
    summary, _ = compress_demo(g, settings.rounds, settings.local_algorithm, delta=settings.delta,
                               seed=settings.seed, primitive_round_cost=settings.primitive_round_cost)
    if not summary['outputs_match']:
        raise ContractViolation("Compressed outputs differ from direct simulation")
    return summary


def cmd_sweep(settings: HarnessSettings) -> pd.DataFrame:
    if settings.spec is None:
        raise InputError("sweep needs --spec FILE")
    spec = load_experiment_spec(settings.spec)
    updates: Dict[str, Any] = {}
    if settings.record_timing:
        updates['record_timing'] = True
    if settings.workers > 1:
        updates['workers'] = settings.workers
    if updates:
        spec = spec.model_copy(update=updates)
    results = run_experiment(spec, settings.out, settings.format or 'csv')
    print(summarize_results(results).to_string(index=False), file=sys.stderr)
    return results


COMMANDS: Dict[str, Callable[[HarnessSettings], Any]] = {
    'generate': cmd_generate,
    'match': cmd_match,
    'mis': cmd_mis,
    'peel-direct': cmd_peel_direct,
    'compress-demo': cmd_compress_demo,
    'sweep': cmd_sweep,
}


def render(payload: Any, output_format: Optional[str]) -> str:
    """Graph text as is; tables as CSV unless JSON is asked for; dicts as JSON unless CSV is asked for"""
    if isinstance(payload, str):
        return payload
    if isinstance(payload, pd.DataFrame):
        if output_format == 'json':
            return payload.to_json(orient='records', indent=2) + "\n"
        return payload.to_csv(index=False)
    if output_format == 'csv':
        scalars = {key: value for key, value in payload.items() if not isinstance(value, (list, dict))}
        return pd.DataFrame([scalars]).to_csv(index=False)
    return json.dumps(payload, indent=2) + "\n"


def emit(command: str, payload: Any, settings: HarnessSettings) -> None:
    if command == 'sweep' and settings.out is not None:
        # already written by the experiment runner
        return
    text = render(payload, settings.format)
    if settings.out is None:
        sys.stdout.write(text)
        return
    path = Path(settings.out)
    path.write_text(text)
    logger.info(f"Wrote {command} output to {path}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {key: value for key, value in vars(args).items() if key not in ('command', 'config')}
    try:
        settings = resolve_settings(flags, args.config)
        logging.basicConfig(level=getattr(logging, settings.log_level),
                            format='%(asctime)s %(levelname)s %(name)s: %(message)s')
        emit(args.command, COMMANDS[args.command](settings), settings)
    except (InputError, ValidationError) as e:
        print(f"❌ Invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except OSError as e:
        print(f"❌ Cannot read or write: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except SpaceExceeded as e:
        print(f"❌ Space limit exceeded: {e}", file=sys.stderr)
        return EXIT_SPACE_VIOLATION
    except MpcError as e:
        print(f"❌ Internal contract violation: {e}", file=sys.stderr)
        return EXIT_CONTRACT_VIOLATION
    print(f"✅ {args.command} finished", file=sys.stderr)
    return EXIT_OK
