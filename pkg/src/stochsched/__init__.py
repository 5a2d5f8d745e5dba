"""Simulation and verification toolkit for truthful scheduling of stochastic
tasks on unrelated machines."""

__version__ = "0.1.0"
