"""Data-fusion telemetry laboratory for coherent WDM optical links."""

__version__ = "0.1.0"
