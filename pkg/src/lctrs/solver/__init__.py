"""Bundled constraint solver.

Runs standalone as an SMT-LIB subprocess (``python -m lctrs.solver``) and is
also importable for in-process satisfiability checks via :func:`solve`.
"""
from .core import solve
from .server import SERVER_THEORY, Server, main

__all__ = ["solve", "Server", "SERVER_THEORY", "main"]
