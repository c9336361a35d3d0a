"""Figure rendering for clock-synchronization simulation CSV outputs."""

from .figures import FIGURE_KINDS, EmptyInputError, FigureSpec, SchemaError, render

__version__ = "0.1.0"
__all__ = ["FIGURE_KINDS", "EmptyInputError", "FigureSpec", "SchemaError", "render"]
