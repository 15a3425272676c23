"""Tunneling-kinetics data generation, regression benchmarks and phase diagrams."""

__version__ = "0.1.0"
