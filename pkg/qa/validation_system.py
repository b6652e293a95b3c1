"""
Solution Validation System
Checks matching, cover and MIS outputs against the definitions and, where the
graph is small enough, against the exact oracles; keeps a report of every check
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from graphs.graph_core import Graph
from mpc.errors import BudgetExceeded
from qa.oracles import (
    DEFAULT_BUDGET,
    OracleBudget,
    check_cover,
    check_matching,
    check_mis,
    max_matching_exact,
    min_vertex_cover_exact,
)

logger = logging.getLogger(__name__)


class SolutionValidator:
    """Validate algorithm outputs and accumulate the results"""

    def __init__(self, budget: OracleBudget = DEFAULT_BUDGET):
        self.budget = budget
        self.validation_results: List[Dict] = []

    def validate_matching_output(self, g: Graph, matching: Iterable[Tuple[int, int]],
                                 cover: Iterable[int], run_id: str = 'unknown',
                                 with_oracles: bool = True) -> Dict:
        """Validate a (matching, cover) pair; adds approximation ratios when exact values exist"""
        matching = [tuple(edge) for edge in matching]
        cover = set(cover)
        errors = []
        warnings = []

        if not check_matching(g, matching):
            errors.append("Matching has a non-edge or a shared endpoint")
        if not check_cover(g, cover):
            errors.append("Cover leaves an edge uncovered")
        endpoints = {v for edge in matching for v in edge}
        if not endpoints <= cover:
            errors.append(f"{len(endpoints - cover)} matched vertices are missing from the cover")
        if len(cover) < len(matching):
            errors.append(f"|C|={len(cover)} is smaller than |M|={len(matching)}")

        result = {
            'run_id': run_id,
            'kind': 'matching',
            'timestamp': datetime.now().isoformat(),
            'n': g.n,
            'm': g.m,
            'matching_size': len(matching),
            'cover_size': len(cover),
            'oracle_matching': None,
            'oracle_cover': None,
        }
        if with_oracles:
            result.update(self._oracle_values(g, warnings))
            if result['oracle_matching'] and matching:
                result['matching_ratio'] = result['oracle_matching'] / len(matching)
            if result['oracle_cover']:
                result['cover_ratio'] = len(cover) / result['oracle_cover']
        result.update({'valid': len(errors) == 0, 'errors': errors, 'warnings': warnings})
        self.validation_results.append(result)
        return result

    def _oracle_values(self, g: Graph, warnings: List[str]) -> Dict:
        values: Dict[str, Optional[int]] = {'oracle_matching': None, 'oracle_cover': None}
        if g.n <= self.budget.max_n_exact_matching:
            try:
                values['oracle_matching'], _ = max_matching_exact(g, self.budget)
            except BudgetExceeded as e:
                warnings.append(str(e))
        if g.n <= self.budget.max_n_exact_cover:
            try:
                values['oracle_cover'], _ = min_vertex_cover_exact(g, self.budget)
            except BudgetExceeded as e:
                warnings.append(str(e))
        return values

    def validate_mis_output(self, g: Graph, independent: Iterable[int], run_id: str = 'unknown') -> Dict:
        independent = set(independent)
        errors = []
        if not check_mis(g, independent):
            inside = [(u, v) for u, v in g.sorted_edges if u in independent and v in independent]
            if inside:
                errors.append(f"{len(inside)} edges have both endpoints in the set")
            else:
                errors.append("Set is independent but not maximal")
        result = {
            'run_id': run_id,
            'kind': 'mis',
            'timestamp': datetime.now().isoformat(),
            'n': g.n,
            'm': g.m,
            'mis_size': len(independent),
            'valid': len(errors) == 0,
            'errors': errors,
            'warnings': [],
        }
        self.validation_results.append(result)
        return result

    def generate_validation_report(self) -> Dict:
        total = len(self.validation_results)
        valid_count = sum(1 for r in self.validation_results if r['valid'])
        ratios = [r['matching_ratio'] for r in self.validation_results if 'matching_ratio' in r]
        return {
            'summary': {
                'total_validations': total,
                'valid_count': valid_count,
                'invalid_count': total - valid_count,
                'worst_matching_ratio': max(ratios, default=None),
            },
            'detailed_results': self.validation_results,
            'generated_at': datetime.now().isoformat(),
        }

    def export_validation_report(self, filename: str = 'validation_report.json') -> Path:
        report = self.generate_validation_report()
        path = Path(filename)
        path.write_text(json.dumps(report, indent=2))
        logger.info(f"Validation report exported to {path}")
        return path
