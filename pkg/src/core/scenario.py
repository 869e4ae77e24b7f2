"""Monte Carlo scenario parameters and the analytic DATE of the simulation process."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from src.core.errors import ValidationError
from src.core.types import DatePath, ScenarioKind

DEFAULT_COUNTS: Dict[ScenarioKind, tuple[int, int]] = {
    ScenarioKind.MANY_MANY: (100, 100),
    ScenarioKind.ONE_MANY: (1, 100),
    ScenarioKind.ONE_ONE: (1, 1),
    ScenarioKind.ONE_NONE: (1, 0),
}

# Horizon -> AR coefficient used by the simulation grid.
PRESET_AR_COEF: Dict[int, float] = {72: 0.75, 120: 0.8, 240: 0.9}

ASSIGNMENT_MODES = ("design", "confounded")


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    kind: ScenarioKind = ScenarioKind.ONE_NONE
    T: int = 72  # noqa: N815 - matches the serialized key
    t_c: int = 36
    ar_coef: float = 0.8
    b1: float = 0.01
    b2: float = 0.5
    b3: float = -0.03
    vol_discount: float = 0.95
    sigma2_0: float = 0.01
    n_treated: int = 1
    n_control: int = 0
    replications: int = 1000
    seed: int = 0
    y_0: Optional[float] = None
    assignment: str = "design"
    propensity_slope: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScenarioKind.parse(self.kind))
        self.validate()

    @property
    def stationary_mean(self) -> float:
        return self.b1 / (1.0 - self.ar_coef)

    @property
    def initial_value(self) -> float:
        return self.stationary_mean if self.y_0 is None else float(self.y_0)

    @property
    def n_units(self) -> int:
        return self.n_treated + self.n_control

    def validate(self) -> None:
        if not abs(self.ar_coef) < 1.0:
            raise ValidationError(f"|ar_coef| must be < 1 (got {self.ar_coef})")
        if not 0.0 < self.vol_discount < 1.0:
            raise ValidationError(f"vol_discount must lie in (0, 1) (got {self.vol_discount})")
        if not self.sigma2_0 > 0.0:
            raise ValidationError("sigma2_0 must be positive")
        if not 0 < self.t_c < self.T:
            raise ValidationError(f"t_c must satisfy 0 < t_c < T (t_c={self.t_c}, T={self.T})")
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.assignment not in ASSIGNMENT_MODES:
            raise ValidationError(f"assignment must be one of {ASSIGNMENT_MODES}")
        nt, nc = self.n_treated, self.n_control
        kind = self.kind
        ok = {
            ScenarioKind.MANY_MANY: nt >= 2 and nc >= 2,
            ScenarioKind.ONE_MANY: nt == 1 and nc >= 2,
            ScenarioKind.ONE_ONE: nt == 1 and nc == 1,
            ScenarioKind.ONE_NONE: nt == 1 and nc == 0,
        }[kind]
        if not ok:
            raise ValidationError(f"{kind.value} does not allow n_treated={nt}, n_control={nc}")
        if self.assignment == "confounded" and kind is not ScenarioKind.MANY_MANY:
            raise ValidationError("confounded assignment needs a ManyMany scenario")

    # -- serialization -------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"Unknown scenario keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Scenario JSON is malformed: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("Scenario JSON must be a flat object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: Path) -> "ScenarioConfig":
        if not path.exists():
            raise FileNotFoundError(f"Scenario file not found: {path}")
        return cls.from_json(path.read_text())

    def override(self, **changes: Any) -> "ScenarioConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    @classmethod
    def preset(cls, kind: "str | ScenarioKind", T: int = 72, **changes: Any) -> "ScenarioConfig":  # noqa: N803
        kind = ScenarioKind.parse(kind)
        n_treated, n_control = DEFAULT_COUNTS[kind]
        base = dict(
            kind=kind,
            T=T,
            t_c=T // 2,
            ar_coef=PRESET_AR_COEF.get(T, 0.8),
            n_treated=n_treated,
            n_control=n_control,
        )
        base.update(changes)
        return cls(**base)


def true_date_oracle(cfg: ScenarioConfig) -> DatePath:
    """Population DATE from the arm mean recursions; bounds collapse onto the estimate."""
    theta = cfg.ar_coef
    if not abs(theta) < 1.0:
        raise ValidationError("oracle requires |ar_coef| < 1")
    m = cfg.initial_value
    for _ in range(1, cfg.t_c):
        m = theta * m + cfg.b1
    pre_mean = m
    post = cfg.T - cfg.t_c + 1
    control = np.empty(post)
    treated = np.empty(post)
    control[0] = theta * pre_mean + cfg.b1
    treated[0] = pre_mean + cfg.b2 + cfg.b3
    for h in range(1, post):
        control[h] = theta * control[h - 1] + cfg.b1
        treated[h] = theta * treated[h - 1] + cfg.b3
    effect = treated - control
    zero = np.zeros(post)
    return DatePath(
        horizon_index=np.arange(post),
        estimate=effect,
        lower=effect,
        upper=effect,
        std_error=zero,
    )
