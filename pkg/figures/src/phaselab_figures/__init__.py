"""Figure rendering for phaselab sweep CSVs."""

from .render import FIGURES, FigureError, curves, load_rows, render_figure

__version__ = "0.1.0"
