"""Figure generation for conelab artifacts.

Consumes only the CSV/JSON files written by the conelab command line tool
(decay reports, shell profiles, modal snapshots) and renders them with
matplotlib.  Nothing is recomputed from the raw data; every number shown
comes from an artifact.
"""

from .artifacts import ArtifactError, read_json, read_shells, read_snapshots
from .figures import FigureError, plot_decay, plot_heatmap, plot_sweep, render_figure
from .spec import FigureSpec, SpecError, load_spec, parse_spec

__all__ = [
    "ArtifactError",
    "FigureError",
    "FigureSpec",
    "SpecError",
    "load_spec",
    "parse_spec",
    "plot_decay",
    "plot_heatmap",
    "plot_sweep",
    "read_json",
    "read_shells",
    "read_snapshots",
    "render_figure",
]
