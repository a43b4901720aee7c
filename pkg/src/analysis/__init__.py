"""Post-processing of ensemble tables: susceptibility, log fits, FSS collapse."""
