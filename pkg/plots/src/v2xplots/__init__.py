"""Figure rendering over v2xcoex sweep result CSVs."""

from .figures import FIGURES, FigureSpec, PlotError, Series, figure_spec, \
    render

__all__ = ["FIGURES", "FigureSpec", "PlotError", "Series", "figure_spec",
           "render"]
