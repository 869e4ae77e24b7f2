"""Dynamic linear model: filtering, sampling, discount selection and counterfactual branching."""
