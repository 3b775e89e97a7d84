"""Analysis toolkit for logically constrained term rewrite systems."""

__version__ = "0.1.0"
