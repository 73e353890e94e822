"""Convergence plots from solver trace CSVs."""

from .render import PlotSpec, SchemaError, load_trace, render

__version__ = "0.1.0"
