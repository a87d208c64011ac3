"""Low-cost IR evaluation toolkit."""

__version__ = "0.1.0"
