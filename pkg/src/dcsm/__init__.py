"""DCSM: dynamic coding with proactive fountain overhead for deep-space file transfer."""

__version__ = "0.1.0"
