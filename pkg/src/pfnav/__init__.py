"""Particle-filtered state estimation for tabular Q-learning and NEAT driving agents."""

__version__ = "0.1.0"
