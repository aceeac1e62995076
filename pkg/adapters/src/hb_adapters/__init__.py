"""Adapters that run real models and emit score files in the hb v1 schemas."""

__version__ = "0.1.0"
