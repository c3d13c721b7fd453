"""
FastMCP Server Main Entry Point (modular)

This script initializes the FastMCP server and registers all modular tool fragments:
- Experiments (run, report, features)
- Theory (lowerbound, verify, gaps)

To start the server, run this file as the main module. It speaks stdio only.
"""

from shared_mcp import mcp
import os
import sys

# Add the parent directory to the path to find the config module
sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from config import logger

# Import all tool fragments to register them with the shared mcp instance
import tools.experiment_tool
import tools.theory_tool

if __name__ == "__main__":
    logger.info("Starting cascade-bandits FastMCP server (stdio)")
    try:
        mcp.run(transport="stdio")
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    except Exception as e:
        logger.error(f"Server error: {e}")
