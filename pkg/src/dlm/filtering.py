"""Forward filtering, retrospective smoothing and backward sampling.

The filter follows the conjugate normal / inverse-gamma recursions with discount
evolution (R_t = G C_{t−1} G'/δ) and discount stochastic volatility (n_t = β_v n_{t−1} + 1).
"""
from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
from scipy import stats

from src.core.design import InterventionDesign
from src.core.errors import NumericalBreakdown, ValidationError
from src.core.logging_setup import get_logger
from src.dlm.model import DlmPosterior, DlmSpec, FilterResult

logger = get_logger("dlm.filtering", Path("logs"))


def _symmetric(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def _require_pd(M: np.ndarray, t: int, what: str) -> None:
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"{what} lost positive definiteness at t={t}") from exc


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Square root L with L L' = M for a symmetric PSD matrix (negative eigenvalues clipped)."""
    vals, vecs = np.linalg.eigh(_symmetric(M))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _resolve(y: np.ndarray, X: InterventionDesign | np.ndarray, spec: DlmSpec) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(X, InterventionDesign):
        return spec.observation_matrix(X), spec.observation_target(y, X)
    F = np.atleast_2d(np.asarray(X, dtype=float))
    target = np.asarray(y, dtype=float)
    if F.shape != (target.size, spec.state_dim):
        raise ValidationError(f"regressor matrix must be ({target.size}, {spec.state_dim})")
    return F, target


def forward_filter(y: np.ndarray, X: InterventionDesign | np.ndarray, spec: DlmSpec) -> FilterResult:
    F, target = _resolve(y, X, spec)
    T, p = F.shape
    if not np.all(np.isfinite(target)):
        raise ValidationError("observations must be finite")
    G = spec.G
    known = spec.known_variance is not None

    a = np.empty((T, p))
    R = np.empty((T, p, p))
    m = np.empty((T, p))
    C = np.empty((T, p, p))
    f = np.empty(T)
    Q = np.empty(T)
    n = np.empty(T)
    S = np.empty(T)
    log_pred = np.empty(T)
    df = np.empty(T)

    m_prev, C_prev = spec.m0, spec.C0
    n_prev, S_prev = spec.n0, (spec.known_variance if known else spec.s0)
    for t in range(T):
        a_t = G @ m_prev
        if spec.evolution_cov is not None:
            R_t = G @ C_prev @ G.T + spec.evolution_cov
        else:
            R_t = G @ C_prev @ G.T / spec.delta
        R_t = _symmetric(R_t)
        F_t = F[t]
        f_t = float(F_t @ a_t)
        RF = R_t @ F_t
        Q_t = float(F_t @ RF) + S_prev
        if not np.isfinite(Q_t) or Q_t <= 0.0:
            raise NumericalBreakdown(f"forecast variance is not positive at t={t + 1}")
        e_t = target[t] - f_t
        A_t = RF / Q_t

        if known:
            n_t, S_t = n_prev, S_prev
            df_t = np.inf
            log_pred[t] = stats.norm.logpdf(target[t], loc=f_t, scale=np.sqrt(Q_t))
            C_t = R_t - np.outer(A_t, A_t) * Q_t
        else:
            df_t = spec.beta_v * n_prev
            n_t = df_t + 1.0
            S_t = S_prev + (S_prev / n_t) * (e_t * e_t / Q_t - 1.0)
            if not np.isfinite(S_t) or S_t <= 0.0:
                raise NumericalBreakdown(f"variance estimate collapsed at t={t + 1}")
            log_pred[t] = stats.t.logpdf(target[t], df_t, loc=f_t, scale=np.sqrt(Q_t))
            C_t = (S_t / S_prev) * (R_t - np.outer(A_t, A_t) * Q_t)
        C_t = _symmetric(C_t)
        _require_pd(C_t, t + 1, "posterior scale")

        a[t], R[t], m[t], C[t] = a_t, R_t, a_t + A_t * e_t, C_t
        f[t], Q[t], n[t], S[t], df[t] = f_t, Q_t, n_t, S_t, df_t
        m_prev, C_prev, n_prev, S_prev = m[t], C_t, n_t, S_t

    return FilterResult(
        spec=spec, F=F, target=target, a=a, R=R, m=m, C=C, f=f, Q=Q, n=n, S=S, log_pred=log_pred, df=df
    )


def smooth_moments(filtered: FilterResult) -> Tuple[np.ndarray, np.ndarray]:
    """Retrospective means (T, p) and scales (T, p, p) of θ_t given the whole series."""
    T = filtered.length
    G = filtered.spec.G
    s = np.empty_like(filtered.m)
    V = np.empty_like(filtered.C)
    s[-1], V[-1] = filtered.m[-1], filtered.C[-1]
    for t in range(T - 2, -1, -1):
        B = filtered.C[t] @ G.T @ np.linalg.inv(filtered.R[t + 1])
        s[t] = filtered.m[t] + B @ (s[t + 1] - filtered.a[t + 1])
        V[t] = _symmetric(filtered.C[t] + B @ (V[t + 1] - filtered.R[t + 1]) @ B.T)
    if not filtered.known_variance:
        V = V * (filtered.S[-1] / filtered.S)[:, None, None]
    return s, V


def sample_variances(filtered: FilterResult, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Backward draws of σ²_t under the discount volatility model, shape (S, T)."""
    T = filtered.length
    if filtered.known_variance:
        return np.full((draws, T), float(filtered.spec.known_variance))
    beta = filtered.spec.beta_v
    n, S = filtered.n, filtered.S
    phi = np.empty((draws, T))
    phi[:, -1] = rng.gamma(n[-1] / 2.0, 2.0 / (n[-1] * S[-1]), size=draws)
    for t in range(T - 2, -1, -1):
        shock = 0.0
        if beta < 1.0:
            shock = rng.gamma((1.0 - beta) * n[t] / 2.0, 2.0 / (n[t] * S[t]), size=draws)
        phi[:, t] = beta * phi[:, t + 1] + shock
    return 1.0 / phi


def backward_sample(
    filtered: FilterResult,
    spec: DlmSpec,
    S: int,
    rng: np.random.Generator,
    *,
    unit_index: int = 0,
    seed: int = 0,
) -> DlmPosterior:
    if S < 1:
        raise ValidationError("at least one posterior draw is required")
    T, p = filtered.m.shape
    G = spec.G
    variances = sample_variances(filtered, S, rng)
    # Filtered scales are in units of S_t; a known variance needs no rescaling.
    ratio = np.ones((S, T)) if filtered.known_variance else variances / filtered.S[None, :]

    states = np.empty((S, T, p))
    z = rng.standard_normal((S, p))
    L = psd_sqrt(filtered.C[-1])
    states[:, -1] = filtered.m[-1] + np.sqrt(ratio[:, -1])[:, None] * (z @ L.T)
    for t in range(T - 2, -1, -1):
        B = filtered.C[t] @ G.T @ np.linalg.inv(filtered.R[t + 1])
        h = filtered.m[t] + (states[:, t + 1] - filtered.a[t + 1]) @ B.T
        H = filtered.C[t] - B @ filtered.R[t + 1] @ B.T
        L = psd_sqrt(H)
        z = rng.standard_normal((S, p))
        states[:, t] = h + np.sqrt(ratio[:, t])[:, None] * (z @ L.T)

    return DlmPosterior(
        states=states,
        variances=variances,
        chosen_discounts=(spec.delta, spec.beta_v),
        log_predictive=filtered.log_predictive,
        filtered=filtered,
        unit_index=unit_index,
        seed=seed,
    )


def one_step_intervals(filtered: FilterResult, level: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """Central one-step-ahead predictive intervals for the modelled target."""
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    q = 0.5 + level / 2.0
    scale = np.sqrt(filtered.Q)
    if filtered.known_variance:
        half = stats.norm.ppf(q) * scale
    else:
        half = stats.t.ppf(q, filtered.df) * scale
    return filtered.f - half, filtered.f + half
