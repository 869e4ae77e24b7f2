"""Synthetic panels from the autoregressive intervention process with discount volatility."""
