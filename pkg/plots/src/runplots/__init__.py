"""Offline figures from simulation run directories (CSV + manifest in,
deterministic image files out)."""

from .figures import (FIGURE_IDS, FigureSpec, RunDataError, discover_run,
                      load_body, plot, plot_all, rotation_angles)

__version__ = "0.1.0"

__all__ = ["FIGURE_IDS", "FigureSpec", "RunDataError", "discover_run",
           "load_body", "plot", "plot_all", "rotation_angles", "__version__"]
