"""Dynamic inverse-probability weighting estimators."""
