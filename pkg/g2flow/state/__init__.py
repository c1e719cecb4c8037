"""Run artifacts."""

from .artifacts import ArtifactWriter, format_value

__all__ = ["ArtifactWriter", "format_value"]
