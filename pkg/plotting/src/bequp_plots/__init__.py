"""Figure generation for bequp experiment CSVs."""

from .aggregate import (
    NoRecordsError,
    SchemaError,
    aggregate,
    legend_order,
    load_records,
    noise_panels,
    select_metric,
)
from .render import PlotSpec, build_figure, render

__version__ = "0.1.0"
