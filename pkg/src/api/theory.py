"""
Theory Mixin for cascade-bandits

Provides the analytic side of the CascadeBenchAPI class:
- lower_bound: Evaluate the minimax regret lower bound for (L, K, T)
- verify: Run the property suites and return PASS/FAIL rows
- gaps: Gap table and CTS gap terms for an instance
"""

from dataclasses import asdict
from typing import Any, Dict, Optional, Sequence

from config import logger
from utils import dump_json
from bandits.analysis import cts_gap_terms, gap_table, run_verification_suite
from bandits.lowerbound import minimax_bound


class TheoryMixin:
    def lower_bound(self, L: int, K: int, T: int) -> Dict[str, Any]:
        bound, eps, clamped = minimax_bound(L, K, T)
        return {"L": L, "K": K, "T": T, "bound": bound, "epsilon": eps, "clamped": clamped}

    def verify(self, quick: bool = False, output: Optional[str] = None) -> Dict[str, Any]:
        """
        Run every verification suite.
        Returns {"passed": bool, "rows": [...]}; also written to output when given.
        """
        rows = run_verification_suite(quick=quick)
        report = {"passed": all(r.passed for r in rows), "rows": [asdict(r) for r in rows]}
        if output:
            dump_json(report, output)
            logger.info(f"Verification report written to {output}")
        return report

    def gaps(self, w: Sequence[float], K: int, T: Optional[int] = None) -> Dict[str, Any]:
        table = gap_table(w, K)
        out = table.as_dict()
        if T is not None and table.min_gap > 0:
            out["cts_terms"] = cts_gap_terms(w, K, T)
        return out
