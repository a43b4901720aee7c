"""Static figures for sweep and fit outputs."""
