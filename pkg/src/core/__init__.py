"""Shared domain types, design matrix, scenario configuration, config and logging."""
