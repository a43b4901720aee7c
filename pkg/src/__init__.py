"""Top-level package for the monitored ladder toolkit.

Simulation code (model, dynamics, entanglement, simulation) is kept apart
from the analysis and I/O layers (analysis, tables, plots, cli). The Fock
oracle exists only to validate the Gaussian engine.
"""
