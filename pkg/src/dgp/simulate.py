"""Data generating process for the Monte Carlo scenarios.

Each unit follows an AR(1) with drift ``b1``. A treated unit jumps by ``b2 + b3`` on
top of its previous value at ``t_c`` and afterwards drifts by ``b3`` instead of ``b1``.
Observation noise is Gaussian with a per-unit Beta-Gamma discount volatility path.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.special import expit, logit

from src.core.errors import ValidationError
from src.core.logging_setup import get_logger
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.core.types import DatePath, SeriesPanel, UnitSeries, frozen_array
from src.dgp.streams import StreamRole, replication_seed, unit_stream

logger = get_logger("dgp.simulate", Path("logs"))


@dataclass(frozen=True, slots=True)
class VolatilityPath:
    """Observation variances sigma2[t-1] = σ²_t for t = 1..T."""

    sigma2: np.ndarray

    def __post_init__(self) -> None:
        sigma2 = frozen_array(self.sigma2)
        if not (np.all(np.isfinite(sigma2)) and np.all(sigma2 > 0.0)):
            raise ValidationError("volatility path must be strictly positive and finite")
        object.__setattr__(self, "sigma2", sigma2)


@dataclass(frozen=True, slots=True)
class SimulatedReplication:
    panel: SeriesPanel
    truth: DatePath
    rep_seed: int
    propensity: Optional[np.ndarray] = None


def beta_parameters(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(1, cfg.T + 1, dtype=float)
    scale = (t + cfg.T / 2.0) / 2.0
    return cfg.vol_discount * scale, (1.0 - cfg.vol_discount) * scale


def simulate_volatility(cfg: ScenarioConfig, rng: np.random.Generator) -> VolatilityPath:
    """σ²_t = σ²_{t−1}·β/η_t with η_t ~ Beta(β(t+T/2)/2, (1−β)(t+T/2)/2)."""
    a, b = beta_parameters(cfg)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValidationError("Beta parameters must be positive")
    eta = rng.beta(a, b)
    # Underflow of eta to 0 would make the ratio infinite.
    eta = np.maximum(eta, np.finfo(float).tiny)
    log_sigma2 = np.log(cfg.sigma2_0) + np.cumsum(np.log(cfg.vol_discount) - np.log(eta))
    return VolatilityPath(sigma2=np.exp(log_sigma2))


def draw_noise(vol: VolatilityPath, rng: np.random.Generator, *, noise_free: bool = False) -> np.ndarray:
    if noise_free:
        return np.zeros(vol.sigma2.size)
    return rng.standard_normal(vol.sigma2.size) * np.sqrt(vol.sigma2)


def evolve_path(cfg: ScenarioConfig, treated: bool, noise: np.ndarray) -> np.ndarray:
    """Outcome path y_0..y_T given the noise ε_1..ε_T."""
    theta = cfg.ar_coef
    y = np.empty(cfg.T + 1)
    y[0] = cfg.initial_value
    for t in range(1, cfg.T + 1):
        if treated and t == cfg.t_c:
            mean = y[t - 1] + cfg.b2 + cfg.b3
        elif treated and t > cfg.t_c:
            mean = theta * y[t - 1] + cfg.b3
        else:
            mean = theta * y[t - 1] + cfg.b1
        y[t] = mean + noise[t - 1]
    return y


def simulate_unit(
    cfg: ScenarioConfig,
    treated: bool,
    vol: VolatilityPath,
    rng: np.random.Generator,
    *,
    noise_free: bool = False,
    unit_id: str = "",
) -> UnitSeries:
    if vol.sigma2.size != cfg.T:
        raise ValidationError("volatility path length must equal T")
    noise = draw_noise(vol, rng, noise_free=noise_free)
    return UnitSeries(path=evolve_path(cfg, treated, noise), treated=treated, unit_id=unit_id)


def confounded_propensity(cfg: ScenarioConfig, y_before: np.ndarray) -> np.ndarray:
    """Logistic assignment in y_{t_c−1}, centred so a unit at y_0 has the design share."""
    share = cfg.n_treated / cfg.n_units
    gamma = cfg.propensity_slope
    alpha = logit(share) - gamma * cfg.initial_value
    return expit(alpha + gamma * np.asarray(y_before, dtype=float))


def simulate_scenario(cfg: ScenarioConfig, rep_index: int, *, noise_free: bool = False) -> SimulatedReplication:
    """One replication; every unit owns volatility and noise streams keyed by (seed, rep, unit)."""
    n = cfg.n_units
    noises: List[np.ndarray] = []
    for unit in range(n):
        vol = simulate_volatility(cfg, unit_stream(cfg.seed, rep_index, unit, StreamRole.VOLATILITY))
        noises.append(draw_noise(vol, unit_stream(cfg.seed, rep_index, unit, StreamRole.NOISE), noise_free=noise_free))

    if cfg.assignment == "confounded":
        y_before = np.array([evolve_path(cfg, False, eps)[cfg.t_c - 1] for eps in noises])
        propensity = confounded_propensity(cfg, y_before)
        u = unit_stream(cfg.seed, rep_index, n, StreamRole.ASSIGNMENT).random(n)
        flags = u < propensity
    else:
        flags = np.arange(n) < cfg.n_treated
        propensity = np.full(n, cfg.n_treated / n)

    units = tuple(
        UnitSeries(path=evolve_path(cfg, bool(flags[i]), noises[i]), treated=bool(flags[i]), unit_id=f"unit_{i:03d}")
        for i in range(n)
    )
    panel = SeriesPanel(units=units, t_c=cfg.t_c, horizon=cfg.T)
    logger.debug("Simulated replication %s (%s units, %s treated)", rep_index, n, int(flags.sum()))
    return SimulatedReplication(
        panel=panel,
        truth=true_date_oracle(cfg),
        rep_seed=replication_seed(cfg.seed, rep_index),
        propensity=frozen_array(propensity),
    )
