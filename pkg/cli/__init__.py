"""
Command-line front-end for robust Wald-type testing.

This package contains:
- Shared configuration (`config.py`)
- Run configuration and report schemas (`schemas.py`)
- Typer application with the fit / test / power-table / influence / csif commands (`run_pipeline.py`)
"""

__version__ = "0.1.0"
TOOL_VERSION = f"robust-wald {__version__}"

__all__ = ["__version__", "TOOL_VERSION"]
