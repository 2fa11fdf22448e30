"""Base experts: windowed autoregressive predictors plus simple references.

Every expert owns a training window and only ever ingests observations from
its window start onward, so two experts with the same spec and the same
post-window data behave identically regardless of anything earlier.  AR
fitting is exact ridge-regularized least squares over the whole window,
accumulated as sufficient statistics and re-solved at each prediction; the
window data is never discounted or discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXPERT_KINDS = ("ar", "mean", "last_value")

DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True)
class ExpertSpec:
    """What kind of forecaster to build.

    Parameters
    ----------
    kind:
        "ar" for an autoregression of order `order`, "mean" for the running
        window mean, "last_value" for the most recent observation.
    order:
        Number of lags of an AR expert (ignored otherwise).
    ridge:
        Diagonal regularizer added to the AR normal equations.  The first
        `order` steps of a window are underdetermined; the ridge keeps the
        solve total.
    """

    kind: str = "ar"
    order: int = 1
    ridge: float = DEFAULT_RIDGE

    def __post_init__(self) -> None:
        if self.kind not in EXPERT_KINDS:
            raise ValueError(f"unknown expert kind {self.kind!r}; expected one of {EXPERT_KINDS}")
        if self.kind == "ar":
            if self.order < 1:
                raise ValueError("AR order must be >= 1")
            if self.ridge <= 0:
                raise ValueError("ridge must be positive")


class Expert:
    """Stateful one-step forecaster with a birth time and a training window.

    `birth_time` is the index of the last observation ingested at spawn time
    (0 for an expert created before any data); the expert's first forecast is
    for step birth_time + 1.  Predictions are clipped into [lo, hi], and the
    cold-start ladder is: no data -> midpoint of [lo, hi]; fewer than
    order + 1 observations -> running window mean; otherwise the AR solve.
    """

    def __init__(self, spec: ExpertSpec, birth_time: int, window_start: int,
                 bounds: tuple[float, float]) -> None:
        if birth_time < 0:
            raise ValueError("birth_time must be nonnegative")
        if window_start < 1:
            raise ValueError("window_start must be a positive observation index")
        lo, hi = float(bounds[0]), float(bounds[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise ValueError(f"prediction bounds must be finite with hi > lo, got {bounds}")
        self.spec = spec
        self.birth_time = int(birth_time)
        self.window_start = int(window_start)
        self.lo = lo
        self.hi = hi
        p = spec.order if spec.kind == "ar" else 0
        self._p = p
        self._gram = np.zeros((p + 1, p + 1))
        self._moment = np.zeros(p + 1)
        self._recent: list[float] = []  # last <= p observations, oldest first
        self._count = 0
        self._sum = 0.0
        self._last = 0.0

    @property
    def count(self) -> int:
        """Number of observations ingested so far."""
        return self._count

    def observe(self, y: float) -> None:
        """Ingest the next observation after the last one seen."""
        y = float(y)
        if self.spec.kind == "ar":
            if self._count >= self._p:
                x = np.empty(self._p + 1)
                x[0] = 1.0
                for j in range(1, self._p + 1):
                    x[j] = self._recent[-j]
                self._gram += np.outer(x, x)
                self._moment += x * y
            self._recent.append(y)
            if len(self._recent) > self._p:
                self._recent.pop(0)
        self._count += 1
        self._sum += y
        self._last = y

    def _clip(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def predict(self) -> float:
        """One-step-ahead forecast from the ingested window."""
        if self._count == 0:
            return 0.5 * (self.lo + self.hi)
        if self.spec.kind == "last_value":
            return self._clip(self._last)
        mean = self._sum / self._count
        if self.spec.kind == "mean" or self._count < self._p + 1:
            return self._clip(mean)
        coef = np.linalg.solve(
            self._gram + self.spec.ridge * np.eye(self._p + 1), self._moment
        )
        pred = coef[0]
        for j in range(1, self._p + 1):
            pred += coef[j] * self._recent[-j]
        return self._clip(float(pred))


def spawn(spec: ExpertSpec, birth_time: int, window_start: int,
          history: Sequence[float], bounds: tuple[float, float]) -> Expert:
    """Create an expert and feed it its window history.

    `history` must be exactly the observations with indices
    window_start..birth_time, in order (empty when birth_time < window_start).
    """
    expert = Expert(spec, birth_time, window_start, bounds)
    expected = max(0, birth_time - window_start + 1)
    if len(history) != expected:
        raise ValueError(
            f"history of length {len(history)} does not cover observations "
            f"{window_start}..{birth_time} (expected {expected} values)"
        )
    for y in history:
        expert.observe(y)
    return expert
