"""Minimum-cost partition of a graph into k connected parts of at least alpha nodes."""

from .graph import Graph
from .instance import Instance

__all__ = ["Graph", "Instance"]
__version__ = "0.1.0"
