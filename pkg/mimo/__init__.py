"""Massive MIMO channel analysis modules."""
