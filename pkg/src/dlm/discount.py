"""Discount-factor selection by one-step predictive likelihood."""
from __future__ import annotations

from itertools import product
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config_loader import DEFAULT_GRID
from src.core.design import InterventionDesign
from src.core.errors import NumericalBreakdown, ValidationError
from src.core.logging_setup import get_logger
from src.dlm.filtering import forward_filter
from src.dlm.model import DlmSpec

logger = get_logger("dlm.discount", Path("logs"))

DiscountPair = Tuple[float, float]


def discount_grid(values: Sequence[float] | Sequence[DiscountPair] | None = None) -> List[DiscountPair]:
    """Expand a list of factors into the (δ, β_v) product, or pass explicit pairs through."""
    if values is None:
        values = DEFAULT_GRID
    values = list(values)
    if not values:
        raise ValidationError("discount grid must not be empty")
    if all(np.ndim(v) == 1 for v in values):
        return [(float(d), float(b)) for d, b in values]
    return [(float(d), float(b)) for d, b in product(values, repeat=2)]


def grid_search_discounts(
    y: np.ndarray,
    X: InterventionDesign | np.ndarray,
    spec: DlmSpec,
    grid: Optional[Iterable[float] | Iterable[DiscountPair]] = None,
) -> DiscountPair:
    """Pair maximizing the total one-step log predictive; ties go to larger δ, then larger β_v."""
    candidates = discount_grid(None if grid is None else list(grid))
    scored: List[Tuple[float, float, float]] = []
    for delta, beta_v in candidates:
        try:
            filtered = forward_filter(y, X, spec.with_discounts(delta, beta_v))
        except NumericalBreakdown as exc:
            logger.info("Skipping discounts (%s, %s): %s", delta, beta_v, exc)
            continue
        if not np.isfinite(filtered.log_predictive):
            logger.info("Skipping discounts (%s, %s): non-finite log predictive", delta, beta_v)
            continue
        scored.append((filtered.log_predictive, delta, beta_v))
    if not scored:
        raise NumericalBreakdown("every discount pair broke the filter")
    best = max(scored)
    logger.debug("Discount grid winner delta=%s beta_v=%s (log predictive %.4f)", best[1], best[2], best[0])
    return best[1], best[2]
