"""Testing utilities for validating every subsystem."""
