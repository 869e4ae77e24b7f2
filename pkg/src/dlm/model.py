"""Dynamic linear model specification and the records produced by filtering and sampling.

Observation equation (``lag`` form)::

    y_t = F_t' θ_t + ε_t,   F_t = (1, y_{t−1}, spot_t, persistent_t, trend_t)

The ``increment`` form models y_t − y_{t−1} with the same regressors. States evolve as
θ_t = G θ_{t−1} + ω_t where the evolution variance is implied by the discount factor
``delta`` unless an explicit ``evolution_cov`` is given. The observation variance is
either known or follows a discount stochastic-volatility model with factor ``beta_v``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.core.design import InterventionDesign
from src.core.errors import ValidationError
from src.core.types import COMPONENT_NAMES, frozen_array


class ObservationForm(str, Enum):
    LAG = "lag"
    INCREMENT = "increment"


class ContrastMode(str, Enum):
    SIMULATE_FORWARD = "simulate-forward"
    SMOOTHED_STATES = "smoothed-states"


DESIGN_STATE_NAMES: Tuple[str, ...] = ("lag",) + COMPONENT_NAMES


@dataclass(frozen=True, slots=True)
class DlmSpec:
    m0: np.ndarray
    C0: np.ndarray
    n0: float = 20.0
    s0: float = 0.01
    delta: float = 0.99
    beta_v: float = 0.99
    G: Optional[np.ndarray] = None
    intercept: bool = True
    form: ObservationForm = ObservationForm.LAG
    known_variance: Optional[float] = None
    evolution_cov: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        m0 = frozen_array(np.atleast_1d(self.m0))
        C0 = frozen_array(np.atleast_2d(self.C0))
        p = m0.size
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "C0", C0)
        object.__setattr__(self, "G", frozen_array(np.eye(p) if self.G is None else np.atleast_2d(self.G)))
        object.__setattr__(self, "form", ObservationForm(self.form))
        if self.evolution_cov is not None:
            object.__setattr__(self, "evolution_cov", frozen_array(np.atleast_2d(self.evolution_cov)))
        self.validate()

    def validate(self) -> None:
        p = self.state_dim
        if self.C0.shape != (p, p) or self.G.shape != (p, p):
            raise ValidationError("C0 and G must be square matrices matching m0")
        try:
            np.linalg.cholesky(self.C0)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("C0 must be positive definite") from exc
        if not 0.0 < self.delta <= 1.0 or not 0.0 < self.beta_v <= 1.0:
            raise ValidationError(f"discounts must lie in (0, 1] (delta={self.delta}, beta_v={self.beta_v})")
        if not (self.n0 > 0.0 and self.s0 > 0.0):
            raise ValidationError("n0 and s0 must be positive")
        if self.known_variance is not None and not self.known_variance > 0.0:
            raise ValidationError("known_variance must be positive")
        if self.evolution_cov is not None:
            W = self.evolution_cov
            if W.shape != (p, p) or np.min(np.linalg.eigvalsh((W + W.T) / 2.0)) < -1e-12:
                raise ValidationError("evolution_cov must be a positive semi-definite p×p matrix")

    @property
    def state_dim(self) -> int:
        return int(self.m0.size)

    @property
    def state_names(self) -> Tuple[str, ...]:
        names = (("intercept",) if self.intercept else ()) + DESIGN_STATE_NAMES
        return names if len(names) == self.state_dim else tuple(f"x{i}" for i in range(self.state_dim))

    @property
    def carry(self) -> float:
        """Weight of y_{t−1} outside the regression: 1 in the increment form."""
        return 1.0 if self.form is ObservationForm.INCREMENT else 0.0

    @classmethod
    def default(
        cls,
        *,
        intercept: bool = True,
        form: str | ObservationForm = ObservationForm.LAG,
        prior_lag: float = 0.95,
        n0: float = 20.0,
        s0: float = 0.01,
        delta: float = 0.99,
        beta_v: float = 0.99,
    ) -> "DlmSpec":
        """Diffuse prior with C0 = I and the lag coefficient centred at ``prior_lag``.

        With ``intercept=True`` the state is (intercept, lag, spot, persistent, trend) and
        m0 = (0, 0.95, 0, 0, 0). ``intercept=False`` gives the four-state form with
        m0 = (0.95, 0, 0, 0). In the increment form the lag mean is ``prior_lag − 1``.
        """
        form = ObservationForm(form)
        lag_mean = prior_lag - 1.0 if form is ObservationForm.INCREMENT else prior_lag
        m0 = np.array(([0.0] if intercept else []) + [lag_mean, 0.0, 0.0, 0.0])
        return cls(
            m0=m0,
            C0=np.eye(m0.size),
            n0=n0,
            s0=s0,
            delta=delta,
            beta_v=beta_v,
            intercept=intercept,
            form=form,
        )

    def with_discounts(self, delta: float, beta_v: float) -> "DlmSpec":
        return replace(self, delta=float(delta), beta_v=float(beta_v))

    # -- design to observation equation -------------------------------------------------

    def observation_matrix(self, design: InterventionDesign) -> np.ndarray:
        F = design.regressors()
        if self.intercept:
            F = np.column_stack([np.ones(design.length), F])
        if F.shape[1] != self.state_dim:
            raise ValidationError(f"design has {F.shape[1]} regressors but the state has {self.state_dim}")
        return F

    def observation_target(self, y: np.ndarray, design: InterventionDesign) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.size != design.length:
            raise ValidationError("observation vector length must equal the design length")
        return y - design.lagged_outcome if self.form is ObservationForm.INCREMENT else y


@dataclass(frozen=True, slots=True)
class FilterResult:
    """Per-time filtering moments; row t−1 belongs to observation t = 1..T.

    ``n`` and ``S`` are the posterior degrees of freedom and variance estimate after
    each update; with a known variance they stay at the prior values.
    """

    spec: DlmSpec
    F: np.ndarray
    target: np.ndarray
    a: np.ndarray
    R: np.ndarray
    m: np.ndarray
    C: np.ndarray
    f: np.ndarray
    Q: np.ndarray
    n: np.ndarray
    S: np.ndarray
    log_pred: np.ndarray
    df: np.ndarray

    @property
    def length(self) -> int:
        return int(self.target.size)

    @property
    def log_predictive(self) -> float:
        return float(np.sum(self.log_pred))

    @property
    def known_variance(self) -> bool:
        return self.spec.known_variance is not None

    def prior_S(self, t_index: int) -> float:
        """Variance estimate S_{t−1} entering observation row ``t_index``."""
        return float(self.spec.s0 if t_index == 0 else self.S[t_index - 1])


@dataclass(frozen=True, slots=True)
class DlmPosterior:
    """Joint FFBS draws: ``states`` is (S, T, p), ``variances`` is (S, T)."""

    states: np.ndarray
    variances: np.ndarray
    chosen_discounts: Tuple[float, float]
    log_predictive: float
    filtered: Optional[FilterResult] = None
    unit_index: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        variances = np.asarray(self.variances, dtype=float)
        if states.ndim != 3 or states.shape[0] < 1:
            raise ValidationError("posterior needs at least one draw of shape (T, p)")
        if variances.shape != states.shape[:2]:
            raise ValidationError("variance draws must be (S, T)")
        if not np.all(variances > 0.0):
            raise ValidationError("every variance draw must be positive")
        states.setflags(write=False)
        variances.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "variances", variances)

    @property
    def draws(self) -> int:
        return int(self.states.shape[0])

    @property
    def length(self) -> int:
        return int(self.states.shape[1])
