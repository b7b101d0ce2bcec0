"""Command-line interface and document format."""

from .document import emit, parse
from .main import main

__all__ = ["main", "parse", "emit"]
