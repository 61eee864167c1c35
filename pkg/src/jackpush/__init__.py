"""Simulation and exact oracles for the multilevel Jack process."""

__version__ = "0.1.0"
