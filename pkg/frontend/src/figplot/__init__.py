"""Regenerates the simulator's figure types from persisted CSV files.

Strictly a post-processing layer: it never calls the simulator, only
validates and renders the CSV contracts (repair curves, lifetime sweeps,
gadget spectra, interaction-potential maps).
"""

__version__ = "0.1.0"

from .render import PlotJob, RenderInfo, SchemaError, render  # noqa: F401
