"""Dense Fock-space oracle used to cross-check the Gaussian engine."""
