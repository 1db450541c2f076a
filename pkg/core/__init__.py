"""Expression language, experiment I/O, probe registry and runner."""

from __future__ import annotations

from . import expressions

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "expressions",
]
