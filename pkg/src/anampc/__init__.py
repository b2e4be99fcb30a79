"""Analog explicit-MPC compiler and Buck converter validation suite."""

__version__ = "0.1.0"
