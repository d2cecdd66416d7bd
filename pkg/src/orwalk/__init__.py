"""Random walks on horizontally oriented lattices."""

__version__ = "0.1.0"
