"""
Experiment Mixin for cascade-bandits

Provides experiment orchestration for the CascadeBenchAPI class:
- run_experiment: Run a config (file path or dict) and write every artifact
- render_report: Re-render table, CSVs and plot from a saved result.json

Intended to be used as a mixin in the modular API architecture.
"""

import os
from typing import Any, Dict, Optional, Union

from config import logger
from utils import load_json
from bandits.harness import ExperimentResult, load_experiment_config, run_experiment
from bandits.report import emit_report


class ExperimentMixin:
    def __init__(self):
        self.last_result: Optional[ExperimentResult] = None

    def run_experiment(self, config: Union[str, Dict[str, Any]], output_dir: Optional[str] = None,
                       workers: Optional[int] = None) -> Dict[str, Any]:
        """
        Run every (policy, run) cell of the config.
        Returns the rendered table, aggregates and artifact paths.
        """
        cfg = load_experiment_config(config)
        out_dir = output_dir or cfg.output_dir or self.output_root
        logger.info(f"Experiment requested; artifacts go to {out_dir}")
        result = run_experiment(cfg, workers=workers)
        self.last_result = result
        artifacts = emit_report(result, out_dir)
        return {
            "table": artifacts.table,
            "paths": artifacts.paths,
            "aggregates": result.to_dict()["aggregates"],
        }

    def render_report(self, result_path: str, output_dir: Optional[str] = None) -> Dict[str, Any]:
        """Reload a result document and write the report artifacts next to it unless output_dir is given."""
        result = ExperimentResult.from_dict(load_json(result_path))
        out_dir = output_dir or os.path.dirname(os.path.abspath(result_path))
        artifacts = emit_report(result, out_dir)
        return {"table": artifacts.table, "paths": artifacts.paths}
