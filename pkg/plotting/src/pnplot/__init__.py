"""BER-versus-Eb/N0 figure rendering for receiver sweep CSVs.

Consumes the CSV files written by the pnrx simulation harness (or anything
with the same columns) and draws log-scale BER waterfall figures with one
curve per detector variant, reference-curve styling, and upper-limit
markers where a point recorded zero errors.
"""

from .figure import PlotSpec, PlotError, build_figure, render

__version__ = "0.1.0"

__all__ = ["PlotSpec", "PlotError", "build_figure", "render"]
