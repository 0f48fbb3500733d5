"""Punctured fatgraphs, screens, nests and the paired fatgraph complex."""

__version__ = "0.1.0"
