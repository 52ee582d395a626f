"""Numerical lab for loops, holonomy and ends of Ricci-flat manifolds."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
