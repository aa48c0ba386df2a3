"""Rhythm-guided positional morphing for causal next-item recommenders."""

__version__ = "0.1.0"
