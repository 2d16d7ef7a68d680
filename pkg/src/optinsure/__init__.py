"""Insurance on long option positions: pricing, call/put matching, contracts and settlement."""

from .money import Money

__version__ = "0.1.0"

__all__ = ["Money", "__version__"]
