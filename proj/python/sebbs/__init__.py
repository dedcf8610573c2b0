"""Sound event bounding boxes for sound event detection."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, DataError

__all__ = [name for name in dir() if not name.startswith("_")]
