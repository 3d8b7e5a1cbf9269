"""Figure recipes: what to read, what to draw, where to write."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import pandas as pd

KINDS = ("influence", "trajectory", "continuation", "heatmap", "portrait")

# required columns per named input slot
_SCHEMAS = {
    "trajectory": {"trajectory": ["t", "x_0"]},
    "heatmap": {"counts": ["gamma", "delta", "count"]},
    "portrait": {
        "fixed_points": ["x1", "x2", "class_reduced", "class_full"],
        "nullclines": ["component", "polyline_id", "x1", "x2"],
        "basins": ["x1", "x2", "attractor_id", "polarization"],
    },
}


class SchemaError(ValueError):
    """An input file is missing or does not match its published schema."""


@dataclass(frozen=True)
class FigureRecipe:
    """Inputs and styling for one figure.

    `inputs` maps slot names (per kind: trajectory -> trajectory CSV;
    continuation -> branch JSON under "branch"; heatmap -> "counts";
    portrait -> "fixed_points"/"nullclines"/"basins") to file paths.
    `options` carries kind-specific styling (gamma/delta lists for influence
    curves, overlay toggles, titles).
    """

    kind: str
    inputs: dict[str, str] = field(default_factory=dict)
    out_path: str = "figure.png"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected {KINDS}")


def load_csv(recipe: FigureRecipe, slot: str) -> pd.DataFrame:
    path = recipe.inputs.get(slot)
    if not path:
        raise SchemaError(f"{recipe.kind} figure needs an input named {slot!r}")
    if not os.path.exists(path):
        raise SchemaError(f"input {slot!r} not found at {path}")
    frame = pd.read_csv(path)
    for col in _SCHEMAS.get(recipe.kind, {}).get(slot, []):
        if col not in frame.columns:
            raise SchemaError(f"{slot} file {path} is missing column {col!r}")
    return frame
