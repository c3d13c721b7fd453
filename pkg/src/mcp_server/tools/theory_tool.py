"""
Theory Tool for cascade-bandits MCP Server (modular)

Provides analytic operations as a FastMCP tool, including:
- lowerbound: Minimax regret lower bound and maximizing epsilon for (L, K, T)
- verify: Run the property suites (quick mode by default)
- gaps: Gap table and CTS gap terms for a weight vector

This tool is registered with FastMCP and can be called via the MCP server.
"""

import os
import sys
import json
import asyncio
from typing import List, Optional

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
async def theory(
    action: str,
    L: int = 0,
    K: int = 0,
    T: int = 0,
    w: Optional[List[float]] = None,
    quick: bool = True
):
    """
    FastMCP Tool: Cascading-bandit theory checks

    Parameters:
        action: The theory action (lowerbound, verify, gaps)
        L, K, T: Ground-set size, list length and horizon (lowerbound; K and optional T for gaps)
        w: Click probabilities (gaps)
        quick: Reduced replication counts for verify
    Returns:
        Dict with operation result and error status
    """
    api = get_api()
    logger.info(f"Tool called: theory with action={action}")
    try:
        if action == "lowerbound":
            if L < 1 or K < 1 or T < 1:
                return _error("Please specify positive L, K and T for the lower bound")
            result = api.lower_bound(L, K, T)
            text = f"Lower bound {result['bound']:.6g} at epsilon {result['epsilon']:.6g}"
            if result["clamped"]:
                text += " (vacuous, clamped to 0)"
            return {"content": [{"type": "text", "text": text}], "isError": False}
        elif action == "verify":
            report = await asyncio.to_thread(api.verify, quick)
            lines = [f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}  {r['measured']:.3g}" for r in report["rows"]]
            return {"content": [{"type": "text", "text": "\n".join(lines)}], "isError": not report["passed"]}
        elif action == "gaps":
            if not w or K < 1:
                return _error("Please specify w and a positive K for the gap table")
            result = api.gaps(w, K, T or None)
            return {"content": [{"type": "text", "text": json.dumps(result, indent=2, sort_keys=True)}], "isError": False}
        else:
            return _error(f"Unknown action: '{action}'. Available actions: lowerbound, verify, gaps")
    except CascadeBanditError as e:
        return _error(f"Error in theory: {str(e)}")
    except Exception as e:
        logger.error(f"Error in theory: {str(e)}")
        return _error(f"Error in theory: {str(e)}")
