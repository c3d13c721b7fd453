"""
Experiment Tool for cascade-bandits MCP Server (modular)

Provides experiment operations as a FastMCP tool, including:
- run: Run an experiment config (JSON file path) and write its artifacts
- report: Re-render the report of a saved result.json
- features: Generate truncated-SVD item features from a 0/1 click CSV

This tool is registered with FastMCP and can be called via the MCP server.
"""

import os
import sys
import json
import asyncio

# Add the parent directory to the path to find the config module
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(__file__))))

from config import logger
from utils import CascadeBanditError
from api import CascadeBenchAPI
from shared_mcp import mcp


def get_api():
    """Helper to get a new CascadeBenchAPI instance."""
    return CascadeBenchAPI()


def _error(text: str):
    return {"content": [{"type": "text", "text": text}], "isError": True}


@mcp.tool()
async def experiment(
    action: str,
    config_path: str = "",
    result_path: str = "",
    output_dir: str = "",
    train_path: str = "",
    d: int = 2,
    K: int = 0
):
    """
    FastMCP Tool: Cascading-bandit experiments

    Parameters:
        action: The experiment action (run, report, features)
        config_path: Experiment config JSON (run)
        result_path: Saved result.json (report)
        output_dir: Directory for artifacts (optional)
        train_path: 0/1 click CSV, one row per user (features)
        d: Feature dimension (features)
        K: List length the features are normalized for (features)
    Returns:
        Dict with operation result and error status
    """
    api = get_api()
    logger.info(f"Tool called: experiment with action={action}")
    try:
        if action == "run":
            if not config_path:
                return _error("Please specify a config_path parameter to run an experiment")
            result = await asyncio.to_thread(api.run_experiment, config_path, output_dir or None)
            return {
                "content": [
                    {"type": "text", "text": result["table"]},
                    {"type": "text", "text": json.dumps(result["paths"], indent=2, sort_keys=True)},
                ],
                "isError": False
            }
        elif action == "report":
            if not result_path:
                return _error("Please specify a result_path parameter to render a report")
            result = await asyncio.to_thread(api.render_report, result_path, output_dir or None)
            return {"content": [{"type": "text", "text": result["table"]}], "isError": False}
        elif action == "features":
            if not train_path or K < 1:
                return _error("Please specify train_path and a positive K to generate features")
            result = await asyncio.to_thread(api.generate_features, train_path, d, K,
                                             os.path.join(output_dir, f"features_d{d}.json") if output_dir else None)
            return {"content": [{"type": "text", "text": json.dumps(result, indent=2, sort_keys=True)}], "isError": False}
        else:
            return _error(f"Unknown action: '{action}'. Available actions: run, report, features")
    except CascadeBanditError as e:
        return _error(f"Error in experiment: {str(e)}")
    except Exception as e:
        logger.error(f"Error in experiment: {str(e)}")
        return _error(f"Error in experiment: {str(e)}")
