"""Bounded per-step loss functions, normalized to [0, 1] over a declared range."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

LOSS_KINDS = ("squared", "absolute")


@dataclass(frozen=True)
class LossFunction:
    """Per-step loss of a forecast against an outcome, guaranteed in [0, 1].

    Both arguments are clipped into [lo, hi] before evaluation, so early
    experts that extrapolate wildly cannot produce unbounded losses.  The
    normalization by (hi - lo) makes the regret-bound arithmetic valid
    without per-loss constants.
    """

    kind: str = "squared"
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if not self.hi > self.lo:
            raise ValueError(f"loss range must satisfy hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def clip(self, x: float) -> float:
        """Clamp a value into the declared range."""
        return min(max(float(x), self.lo), self.hi)

    def evaluate(self, forecast: float, outcome: float) -> float:
        """Normalized loss of `forecast` against `outcome`; always in [0, 1]."""
        d = (self.clip(forecast) - self.clip(outcome)) / (self.hi - self.lo)
        return d * d if self.kind == "squared" else abs(d)

    def cumulative(self, forecasts: Iterable[float], outcomes: Iterable[float]) -> float:
        """Sum of per-step losses over aligned forecast/outcome pairs."""
        fs, ys = list(forecasts), list(outcomes)
        if len(fs) != len(ys):
            raise ValueError(f"length mismatch: {len(fs)} forecasts vs {len(ys)} outcomes")
        return sum(self.evaluate(p, y) for p, y in zip(fs, ys))
