"""Scenario toolchain: road topologies, scene scripts, motion programs,
simulation with interaction listeners, NL descriptions, metrics and
procedural scene generation."""

__version__ = "0.1.0"
