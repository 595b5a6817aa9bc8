"""Simulator for two coupled quantum van der Pol oscillators with squeezing."""

__version__ = "0.1.0"
