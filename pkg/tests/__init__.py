"""Affinity system tests."""
