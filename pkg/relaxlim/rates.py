"""Log-log rate fits of an error against eps."""

import logging
import math
from collections.abc import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import RateFitError

logger = logging.getLogger(__name__)


class RateFit(BaseModel):
    """Least-squares line through (log eps, log error).

    `exact_zero` marks the degenerate case where every error vanishes; slope,
    intercept and residual are then None.
    """

    model_config = ConfigDict(frozen=True)

    points: list[tuple[float, float]]
    slope: float | None = None
    intercept: float | None = None
    residual: float | None = None
    exact_zero: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RateFit":
        if len(self.points) < 2:
            raise ValueError("a rate fit needs at least two points")
        eps = [p[0] for p in self.points]
        if any(b >= a for a, b in zip(eps, eps[1:], strict=False)):
            raise ValueError("eps values must be strictly decreasing")
        if not self.exact_zero and (self.slope is None or not math.isfinite(self.slope)):
            raise ValueError("slope must be finite unless all errors are zero")
        return self


def rate_fit(points: Iterable[tuple[float, float]]) -> RateFit:
    ordered = sorted(((float(e), float(err)) for e, err in points), key=lambda p: -p[0])
    if len(ordered) < 2:
        raise RateFitError("need at least two (eps, error) points", {"count": len(ordered)})
    eps = np.array([p[0] for p in ordered])
    err = np.array([p[1] for p in ordered])
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise RateFitError("eps values must be positive and distinct", {"eps": eps.tolist()})
    if np.all(err == 0.0):
        return RateFit(points=ordered, exact_zero=True)
    if np.any(~np.isfinite(err)) or np.any(err <= 0.0):
        raise RateFitError("errors must be positive to fit a rate", {"errors": err.tolist()})

    x = np.log(eps)
    y = np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    logger.debug("rate fit points=%d slope=%.6g residual=%.3g", len(ordered), slope, residual)
    return RateFit(
        points=ordered, slope=float(slope), intercept=float(intercept), residual=residual
    )
