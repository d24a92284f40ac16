"""
Command-line front end for the channel hardening toolkit.

Reads and writes CHT v1 channel tensors, runs the analysis pipeline and
writes CSV/YAML artifacts with a reproducibility manifest.
"""

__version__ = "0.1.0"
