"""Simulation library for multi-principal assistance games."""

__version__ = "0.1.0"
