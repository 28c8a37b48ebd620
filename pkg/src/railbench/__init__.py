"""High-speed-train handover simulator and regression benchmark."""

__version__ = "0.1.0"
