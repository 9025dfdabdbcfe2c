from khl.verifiers.report import DeficitReport
from khl.verifiers.sweep import build_claim, run_sweep, sweep_summary

__all__ = ["DeficitReport", "build_claim", "run_sweep", "sweep_summary"]
