"""Versioned column-family store with simulated cluster tools."""

from ._robostore import Database, Graph, RobostoreError, cli, run_scenario

__all__ = ["Database", "Graph", "RobostoreError", "cli", "run_scenario"]
