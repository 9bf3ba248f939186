"""State-dependent causal inference from conditionally stationary time-series."""

__version__ = "0.1.0"
