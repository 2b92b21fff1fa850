"""Onset of synchronization in networks of interacting oscillator populations."""

__version__ = "0.1.0"
