"""Reduced-order model of a thruster-assisted quadruped walking a narrow path."""

__version__ = "0.1.0"
