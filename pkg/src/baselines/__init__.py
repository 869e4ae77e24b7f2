"""Comparison estimators returning effect paths."""
