"""Render nqslab CSV outputs as figures.

This package consumes only the CSV files written by the nqslab CLI; it
never recomputes any physics.
"""
from .figures import (FIGURE_KINDS, DataError, FigureSpec, SchemaError,
                      build_figure, render)

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "SchemaError",
    "DataError",
    "build_figure",
    "render",
    "__version__",
]
