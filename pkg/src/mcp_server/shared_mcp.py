# Shared FastMCP instance for all tools
from fastmcp import FastMCP

mcp = FastMCP("cascade-bandits")
