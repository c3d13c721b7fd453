"""Cascading-bandit environment, policies, linear generalization, lower bounds, analysis and harness."""
