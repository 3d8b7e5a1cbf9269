"""Rendering scripts for the sigbc toolkit's CSV and JSON outputs.

Everything here is read-only over its inputs and deterministic: fixed canvas
sizes, fixed color scales, and date-free metadata, so re-rendering a bundle
produces byte-identical images.
"""

__version__ = "0.1.0"

from .recipes import FigureRecipe, SchemaError
from .render import render
