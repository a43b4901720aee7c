"""Trajectory protocol, ensemble averaging and parameter sweeps."""
