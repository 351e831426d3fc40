"""Contextless stress classification from per-minute wearable summaries."""

__version__ = "0.1.0"
