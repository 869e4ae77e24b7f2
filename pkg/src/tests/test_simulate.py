"""Simulation process and keyed random streams."""
from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate, stats

from src.core.errors import ValidationError
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.dgp.simulate import (
    VolatilityPath,
    beta_parameters,
    confounded_propensity,
    evolve_path,
    simulate_scenario,
    simulate_unit,
    simulate_volatility,
)
from src.dgp.streams import StreamRole, replication_seed, unit_stream


def test_streams_are_keyed_not_ordered() -> None:
    a = unit_stream(7, 3, 2, StreamRole.NOISE).standard_normal(4)
    unit_stream(7, 3, 1, StreamRole.NOISE).standard_normal(100)
    b = unit_stream(7, 3, 2, StreamRole.NOISE).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    c = unit_stream(7, 3, 2, StreamRole.VOLATILITY).standard_normal(4)
    assert not np.allclose(a, c)
    assert replication_seed(7, 0) != replication_seed(7, 1)


def test_noise_free_paths_reproduce_the_oracle() -> None:
    cfg = ScenarioConfig(T=40, t_c=15, ar_coef=0.8, b1=0.01, b2=0.5, b3=-0.03)
    zeros = np.zeros(cfg.T)
    effect = evolve_path(cfg, True, zeros) - evolve_path(cfg, False, zeros)
    np.testing.assert_allclose(effect[cfg.t_c :], true_date_oracle(cfg).estimate, atol=1e-12)
    np.testing.assert_allclose(effect[: cfg.t_c], 0.0, atol=1e-12)


def test_volatility_path_is_positive_with_expected_parameters() -> None:
    cfg = ScenarioConfig(T=72, t_c=36)
    a, b = beta_parameters(cfg)
    assert a[0] == pytest.approx(0.95 * (1 + 36) / 2)
    assert b[-1] == pytest.approx(0.05 * (72 + 36) / 2)
    vol = simulate_volatility(cfg, unit_stream(1, 0, 0, StreamRole.VOLATILITY))
    assert vol.sigma2.shape == (72,)
    assert np.all(vol.sigma2 > 0)
    with pytest.raises(ValidationError):
        VolatilityPath(sigma2=np.array([1.0, -1.0]))


def test_simulate_unit_requires_matching_volatility() -> None:
    cfg = ScenarioConfig(T=10, t_c=5)
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        simulate_unit(cfg, True, VolatilityPath(np.ones(9)), rng)
    unit = simulate_unit(cfg, True, VolatilityPath(np.ones(10)), rng, noise_free=True)
    assert unit.path[0] == pytest.approx(cfg.stationary_mean)


def test_replication_is_deterministic_and_shaped() -> None:
    cfg = ScenarioConfig.preset("OneMany", 72, n_control=5, seed=42)
    first = simulate_scenario(cfg, 3)
    second = simulate_scenario(cfg, 3)
    np.testing.assert_array_equal(first.panel.matrix(), second.panel.matrix())
    assert first.panel.matrix().shape == (6, 73)
    assert [u.treated for u in first.panel.units] == [True] + [False] * 5
    assert first.panel.units[0].unit_id == "unit_000"
    assert first.rep_seed == replication_seed(42, 3)
    other = simulate_scenario(cfg, 4)
    assert not np.allclose(first.panel.matrix(), other.panel.matrix())


def test_adding_controls_keeps_existing_units() -> None:
    small = simulate_scenario(ScenarioConfig.preset("OneMany", 72, n_control=3, seed=5), 0)
    large = simulate_scenario(ScenarioConfig.preset("OneMany", 72, n_control=6, seed=5), 0)
    np.testing.assert_array_equal(small.panel.matrix(), large.panel.matrix()[:4])


def test_confounded_assignment_tracks_pre_history() -> None:
    cfg = ScenarioConfig.preset("ManyMany", 72, n_treated=50, n_control=50, assignment="confounded", seed=1)
    p = confounded_propensity(cfg, np.array([cfg.initial_value, cfg.initial_value + 1.0]))
    assert p[0] == pytest.approx(0.5)
    assert p[1] > p[0]
    sim = simulate_scenario(cfg, 0)
    assert sim.propensity.shape == (100,)
    assert 0 < sum(u.treated for u in sim.panel.units) < 100


def test_log_volatility_increments_match_the_beta_log_moment() -> None:
    cfg = ScenarioConfig(T=72, t_c=36, vol_discount=0.95)
    rng = np.random.default_rng(17)
    draws = 20_000
    increments = np.empty((draws, cfg.T))
    for i in range(draws):
        log_sigma2 = np.log(np.concatenate([[cfg.sigma2_0], simulate_volatility(cfg, rng).sigma2]))
        increments[i] = np.diff(log_sigma2)
    a, b = beta_parameters(cfg)
    log_moment = np.array(
        [integrate.quad(lambda x, ai=ai, bi=bi: np.log(x) * stats.beta.pdf(x, ai, bi), 0.0, 1.0)[0] for ai, bi in zip(a, b)]
    )
    expected = np.log(cfg.vol_discount) - log_moment
    se = increments.std(axis=0, ddof=1) / np.sqrt(draws)
    assert np.all(np.abs(increments.mean(axis=0) - expected) < 4.5 * se)
    # Jensen: E[log η] < log E[η] = log β, so log volatility drifts upward.
    assert np.all(expected > 0.0)
