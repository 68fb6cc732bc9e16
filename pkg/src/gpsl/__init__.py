"""Gravitational collapse model: decoherence, forces, fluctuations and trajectories."""

__version__ = "0.1.0"
