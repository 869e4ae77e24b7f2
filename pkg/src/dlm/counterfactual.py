"""Counterfactual branching at the intervention time.

For every posterior draw the treated and untreated mean paths are propagated from the
observed y_{t_c−1} under one shared coefficient path, so the draw's effect is the
difference of two conditional means. Turning on one indicator at a time splits that
effect into spot, persistent and trend parts that add up to the total.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from src.core.design import build_design, indicator_columns
from src.core.errors import ValidationError
from src.core.logging_setup import get_logger
from src.core.types import COMPONENT_NAMES, DatePath, SeriesPanel
from src.dgp.streams import StreamRole, unit_stream
from src.dlm.discount import grid_search_discounts
from src.dlm.filtering import backward_sample, forward_filter, psd_sqrt, smooth_moments
from src.dlm.model import ContrastMode, DlmPosterior, DlmSpec

logger = get_logger("dlm.counterfactual", Path("logs"))

DEFAULT_DRAWS = 5000


@dataclass(frozen=True, slots=True)
class BranchDraws:
    """Per-draw paths over h = 0..T−t_c, each (S, H)."""

    effect: np.ndarray
    components: Dict[str, np.ndarray]
    treated: np.ndarray
    control: np.ndarray


@dataclass(frozen=True, slots=True)
class DlmEstimate:
    date: DatePath
    treated: DatePath
    control: DatePath
    posterior: DlmPosterior

    @property
    def components(self) -> Dict[str, DatePath]:
        return self.date.components or {}


def fit_dlm(
    panel: SeriesPanel,
    spec: Optional[DlmSpec] = None,
    *,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    grid: Optional[Iterable[float]] = None,
    search: bool = True,
    unit_index: Optional[int] = None,
) -> DlmPosterior:
    """Design, discount search, filter and backward sampling for one unit of the panel."""
    spec = spec or DlmSpec.default()
    idx = panel.focal_index() if unit_index is None else unit_index
    unit = panel.units[idx]
    design = build_design(panel, unit)
    y = unit.path[1:]
    if search:
        delta, beta_v = grid_search_discounts(y, design, spec, grid)
        spec = spec.with_discounts(delta, beta_v)
    filtered = forward_filter(y, design, spec)
    rng = unit_stream(seed, 0, idx, StreamRole.POSTERIOR)
    posterior = backward_sample(filtered, spec, draws, rng, unit_index=idx, seed=seed)
    logger.info(
        "DLM fit on unit %s: delta=%s beta_v=%s log predictive %.3f",
        unit.unit_id or idx,
        spec.delta,
        spec.beta_v,
        filtered.log_predictive,
    )
    return posterior


def _forward_coefficients(post: DlmPosterior, spec: DlmSpec, t_c: int, H: int, rng: np.random.Generator) -> np.ndarray:
    """Random-walk every draw forward from its θ_{t_c} with the discount-implied evolution.

    W_t = (1/δ − 1) G V_{t−1} G' is built from the retrospective state scales V of the
    full-series fit, the same information the starting draw conditions on.
    """
    filtered = post.filtered
    if filtered is None:
        raise ValidationError("simulate-forward needs the filtering moments of the posterior")
    S, _, p = post.states.shape
    G = spec.G
    start = t_c - 1
    paths = np.empty((S, H, p))
    paths[:, 0] = post.states[:, start]
    explicit = spec.evolution_cov is not None
    if not explicit:
        _, V = smooth_moments(filtered)
        factor = 1.0 / post.chosen_discounts[0] - 1.0
    for k in range(1, H):
        row = start + k
        if explicit:
            W = spec.evolution_cov
            reference = filtered.S[row]
        else:
            W = factor * (G @ V[row - 1] @ G.T)
            reference = filtered.S[-1]
        scale = np.ones(S) if filtered.known_variance else post.variances[:, row] / reference
        z = rng.standard_normal((S, p))
        paths[:, k] = paths[:, k - 1] @ G.T + np.sqrt(scale)[:, None] * (z @ psd_sqrt(W).T)
    return paths


def coefficient_paths(
    post: DlmPosterior,
    panel: SeriesPanel,
    spec: DlmSpec,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """State draws θ_{t_c..T}, shape (S, H, p)."""
    if post.length != panel.horizon:
        raise ValidationError("posterior length does not match the panel horizon")
    mode = ContrastMode(mode)
    H = panel.post_length
    if mode is ContrastMode.SMOOTHED_STATES:
        return np.asarray(post.states[:, panel.t_c - 1 : panel.horizon])
    if rng is None:
        rng = unit_stream(post.seed, 0, post.unit_index, StreamRole.BRANCH)
    return _forward_coefficients(post, spec, panel.t_c, H, rng)


def branch_draws(
    post: DlmPosterior,
    panel: SeriesPanel,
    spec: DlmSpec,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    rng: Optional[np.random.Generator] = None,
) -> BranchDraws:
    theta = coefficient_paths(post, panel, spec, mode, rng)
    S, H, p = theta.shape
    if p != spec.state_dim:
        raise ValidationError("posterior state dimension does not match the specification")
    off = 1 if spec.intercept else 0
    start = panel.units[post.unit_index].path[panel.t_c - 1]
    indicators = indicator_columns(np.arange(panel.t_c, panel.horizon + 1), panel.t_c, True)

    base = theta[:, :, 0] if spec.intercept else np.zeros((S, H))
    lag = theta[:, :, off]
    contrib = theta[:, :, off + 1 : off + 4] * indicators[None, :, :]

    mu1 = np.full(S, start)
    mu0 = np.full(S, start)
    parts = np.zeros((S, 3))
    treated = np.empty((S, H))
    control = np.empty((S, H))
    comp = np.empty((S, H, 3))
    for k in range(H):
        persistence = spec.carry + lag[:, k]
        mu1 = persistence * mu1 + base[:, k] + contrib[:, k].sum(axis=1)
        mu0 = persistence * mu0 + base[:, k]
        parts = persistence[:, None] * parts + contrib[:, k]
        treated[:, k], control[:, k], comp[:, k] = mu1, mu0, parts

    return BranchDraws(
        effect=treated - control,
        components={name: comp[:, :, i] for i, name in enumerate(COMPONENT_NAMES)},
        treated=treated,
        control=control,
    )


def _summaries(draws: BranchDraws, level: float, keep_samples: bool) -> Tuple[DatePath, DatePath, DatePath]:
    H = draws.effect.shape[1]
    h = np.arange(H)
    components = {
        name: DatePath.from_samples(h, draws.components[name], level=level, keep_samples=keep_samples)
        for name in COMPONENT_NAMES
    }
    date = DatePath.from_samples(h, draws.effect, level=level, keep_samples=keep_samples, components=components)
    treated = DatePath.from_samples(h, draws.treated, level=level, keep_samples=False)
    control = DatePath.from_samples(h, draws.control, level=level, keep_samples=False)
    return date, treated, control


def branch_counterfactual(
    post: DlmPosterior,
    panel: SeriesPanel,
    spec: DlmSpec,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    rng: Optional[np.random.Generator] = None,
    *,
    level: float = 0.95,
    keep_samples: bool = True,
) -> DatePath:
    """Posterior-mean DATE with central quantile bounds and its three components."""
    date, _, _ = _summaries(branch_draws(post, panel, spec, mode, rng), level, keep_samples)
    return date


def branch_paths(
    post: DlmPosterior,
    panel: SeriesPanel,
    spec: DlmSpec,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    rng: Optional[np.random.Generator] = None,
    *,
    level: float = 0.95,
) -> Tuple[DatePath, DatePath]:
    """Mean paths with and without the intervention, each with quantile bands."""
    _, treated, control = _summaries(branch_draws(post, panel, spec, mode, rng), level, False)
    return treated, control


def decompose_effects(
    post: DlmPosterior,
    panel: SeriesPanel,
    spec: DlmSpec,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    rng: Optional[np.random.Generator] = None,
    *,
    level: float = 0.95,
) -> Dict[str, DatePath]:
    date, _, _ = _summaries(branch_draws(post, panel, spec, mode, rng), level, False)
    return dict(date.components or {})


def estimate_dlm(
    panel: SeriesPanel,
    spec: Optional[DlmSpec] = None,
    *,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    grid: Optional[Iterable[float]] = None,
    search: bool = True,
    mode: ContrastMode | str = ContrastMode.SIMULATE_FORWARD,
    level: float = 0.95,
    keep_samples: bool = True,
) -> DlmEstimate:
    """Fit on the focal unit and branch once; every summary shares the same draws."""
    spec = spec or DlmSpec.default()
    post = fit_dlm(panel, spec, draws=draws, seed=seed, grid=grid, search=search)
    fitted_spec = spec.with_discounts(*post.chosen_discounts)
    date, treated, control = _summaries(branch_draws(post, panel, fitted_spec, mode), level, keep_samples)
    return DlmEstimate(date=date, treated=treated, control=control, posterior=post)
