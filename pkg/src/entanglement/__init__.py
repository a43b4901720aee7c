"""Entanglement measures for the system chain."""
