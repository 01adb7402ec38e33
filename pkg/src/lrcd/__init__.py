"""Simulation and estimation of long-range count dependence in duration-driven point processes."""

__version__ = "0.1.0"
