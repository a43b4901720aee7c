"""Trajectory dynamics package.

Correlation-matrix state, reproducible random streams, and the
unitary/measurement cycle of one quantum trajectory.
"""
