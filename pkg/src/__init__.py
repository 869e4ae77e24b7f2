"""Root package for the datekit estimators, simulators and tooling."""
