"""Command-line interface for g2flow."""

from .main import main

__all__ = ["main"]
