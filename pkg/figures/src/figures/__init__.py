"""figures: renders markovec experiment CSVs into charts.

A read-only consumer of the documented CSV schemas: learning traces
(step/mean_loss/cosine_distance), block-recovery tables, and polarity
tables. Produces fixed-dpi PNG files; no metric is ever computed here.
"""

__version__ = "0.1.0"

from .render import (
    CHART_KINDS,
    EmptyInput,
    FigureSpec,
    SchemaMismatch,
    build_figure,
    render,
)

__all__ = [
    "CHART_KINDS",
    "EmptyInput",
    "FigureSpec",
    "SchemaMismatch",
    "build_figure",
    "render",
]
