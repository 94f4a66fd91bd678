"""Fitting and modeling of resonances, circuits, Kerr nonlinearity, gain and noise."""
