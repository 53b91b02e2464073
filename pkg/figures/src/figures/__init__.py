"""Figure rendering for the kscn benchmark CSV reports."""

from .render import FigureSpec, SchemaMismatch, render

__version__ = "0.1.0"
