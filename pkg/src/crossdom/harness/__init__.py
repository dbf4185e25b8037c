"""Scenario loading, experiment orchestration, reports and the command line."""
from .config import BUILTIN, ScenarioError, config_hash, load_scenario, parse_scenario
from .report import RunReport, export_report
from .runner import AXES, MODES, apply_axis, run_experiment, sweep

__all__ = ["BUILTIN", "ScenarioError", "config_hash", "load_scenario", "parse_scenario", "RunReport",
           "export_report", "AXES", "MODES", "apply_axis", "run_experiment", "sweep"]
