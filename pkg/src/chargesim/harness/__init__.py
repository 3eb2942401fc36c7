"""Scenario library, fixture reports and the command-line front end."""
from .reports import eval_countermeasure, matrix, verify_table1
from .scenarios import LIBRARY, Scenario, build, check, load_scenario

__all__ = ["LIBRARY", "Scenario", "build", "check", "eval_countermeasure", "load_scenario",
           "matrix", "verify_table1"]
