"""Figure rendering for aeroreach result bundles."""

__version__ = "0.1.0"
