"""Two-phase descent trajectory optimization and ignition-point reachability."""

__version__ = "0.1.0"
