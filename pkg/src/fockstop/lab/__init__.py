"""Batch lab: exact-identity suites, refinement studies and reports."""

from .config import LabConfig, load_config
from .convergence import ConvergenceRow
from .report import emit_report
from .runner import run_convergence, run_suite

__all__ = ["LabConfig", "load_config", "ConvergenceRow", "emit_report", "run_convergence", "run_suite"]
