"""Command pipelines: build, fault, spectral and sweep."""

from .core import build_grid, run_build, run_fault, run_spectral, run_sweep

__all__ = ["build_grid", "run_build", "run_fault", "run_spectral", "run_sweep"]
