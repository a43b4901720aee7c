"""Ladder model package.

Parameters of the two-chain free-fermion ladder and the exact one-cycle
single-particle propagator built from its Bloch Hamiltonian.
"""
