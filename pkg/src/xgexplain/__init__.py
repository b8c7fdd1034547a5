"""Explainable expected-goals models from football shot-event data."""

__version__ = "0.1.0"
