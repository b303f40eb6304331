"""Simulation and evaluation of distributed bridge and articulation point detection."""

__version__ = "0.1.0"
