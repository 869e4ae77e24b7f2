"""Monte Carlo evaluation metrics and summary tables."""
