"""Weighted-ensemble aggregators: EWAF, fixed shares, and the growing variant.

All three share the same skeleton: predict with the convex combination of
expert forecasts under the pre-update weights, multiply each weight by
exp(-eta * loss), then (fixed shares only) pool a fraction alpha of the total
and share it equally.  The growing variant runs the fixed-shares update over
an ensemble that gains one expert per epoch of length tau; a newborn enters
with prior weight exactly zero and first receives mass through the shared
pool at its birth step.

Weights are kept normalized after every step.  Each update map is
degree-1 homogeneous in the weight vector, so normalization only rescales
the trajectory and prevents underflow on long runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries
from .experts import Expert, ExpertSpec, spawn
from .losses import LossFunction

MODES = ("ewaf", "fixed_shares", "growing")

BIRTH_WEIGHT_POLICIES = ("alpha_over_q",)


@dataclass(frozen=True)
class AggregatorConfig:
    """Control settings of an aggregator.

    eta is the learning rate of the multiplicative update, alpha the shared
    fraction of weight per step, tau the epoch length (a new expert is added
    every tau steps in growing mode).  The only birth-weight policy is
    "alpha_over_q": a newborn's first mass is the equal share alpha/q of the
    post-update total.
    """

    mode: str = "growing"
    eta: float = 1.0
    alpha: float = 0.0
    tau: int = 1
    birth_weight_policy: str = "alpha_over_q"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError("tau must be a positive integer")
        object.__setattr__(self, "tau", int(self.tau))
        if self.birth_weight_policy not in BIRTH_WEIGHT_POLICIES:
            raise ValueError(f"unsupported birth weight policy {self.birth_weight_policy!r}")


def ensemble_size(t: int, tau: int) -> int:
    """Number of live experts at step t: 1 + floor(t / tau)."""
    return 1 + t // tau


@dataclass
class StepResult:
    """Everything one aggregation step produced."""

    t: int
    forecast: float
    expert_forecasts: np.ndarray
    expert_losses: np.ndarray
    loss: float
    weights: np.ndarray  # post-update, normalized, one entry per live expert


def _normalized(weights: np.ndarray) -> np.ndarray:
    total = weights.sum()
    if not total > 0:
        raise RuntimeError("ensemble weights vanished; cannot normalize")
    return weights / total


def _combine(weights: np.ndarray, forecasts: np.ndarray) -> float:
    return float(np.dot(weights, forecasts))


def _losses(forecasts: np.ndarray, y: float, lf: LossFunction) -> np.ndarray:
    return np.array([lf.evaluate(f, y) for f in forecasts])


def ewaf_step(weights, forecasts, y: float, lf: LossFunction,
              cfg: AggregatorConfig, t: int = 0) -> StepResult:
    """Exponentially weighted average forecaster step.

    Predicts the weight-convex combination of forecasts, then multiplies each
    weight by exp(-eta * loss) and renormalizes.
    """
    w = _normalized(np.asarray(weights, dtype=float))
    f = np.asarray(forecasts, dtype=float)
    if f.shape != w.shape:
        raise ValueError(f"{f.size} forecasts for {w.size} weights")
    p_hat = _combine(w, f)
    losses = _losses(f, y, lf)
    v = w * np.exp(-cfg.eta * losses)
    return StepResult(t, p_hat, f, losses, lf.evaluate(p_hat, y), _normalized(v))


def fixed_shares_step(weights, forecasts, y: float, lf: LossFunction,
                      cfg: AggregatorConfig, t: int = 0) -> StepResult:
    """Fixed-shares step: the multiplicative update followed by pooling.

    v_i = w_i * exp(-eta * loss_i); then a fraction alpha of the total v is
    shared equally, w'_i = (1 - alpha) * v_i + (alpha / q) * sum(v), so no
    expert's weight ever falls to zero while alpha > 0.
    """
    w = _normalized(np.asarray(weights, dtype=float))
    f = np.asarray(forecasts, dtype=float)
    if f.shape != w.shape:
        raise ValueError(f"{f.size} forecasts for {w.size} weights")
    p_hat = _combine(w, f)
    losses = _losses(f, y, lf)
    v = w * np.exp(-cfg.eta * losses)
    shared = _share_update(v, cfg.alpha)
    return StepResult(t, p_hat, f, losses, lf.evaluate(p_hat, y), _normalized(shared))


def _share_update(v: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 - alpha) * v + (alpha / v.size) * v.sum()


def growing_step(weights, forecasts, y: float, t: int, lf: LossFunction,
                 cfg: AggregatorConfig) -> StepResult:
    """Fixed-shares step over the ensemble live at step t.

    Exactly ensemble_size(t, tau) forecasts are required.  When the step is an
    epoch boundary the newest expert carries prior weight zero: it contributes
    nothing to the prediction, and exits the update owning the equal share
    (alpha / q_t) of the post-update total.
    """
    q_t = ensemble_size(t, cfg.tau)
    f = np.asarray(forecasts, dtype=float)
    if f.size != q_t:
        raise ValueError(f"step {t} has {q_t} live experts but got {f.size} forecasts")
    w = np.asarray(weights, dtype=float)
    if w.size > q_t:
        raise ValueError(f"weight vector of length {w.size} exceeds ensemble size {q_t}")
    if w.size < q_t:
        w = np.concatenate([w, np.zeros(q_t - w.size)])
    w = _normalized(w)
    p_hat = _combine(w, f)
    losses = _losses(f, y, lf)
    v = w * np.exp(-cfg.eta * losses)
    shared = _share_update(v, cfg.alpha)
    return StepResult(t, p_hat, f, losses, lf.evaluate(p_hat, y), _normalized(shared))


def growing_weight_trajectory(losses: np.ndarray, cfg: AggregatorConfig) -> list[np.ndarray]:
    """Normalized growing-ensemble weight vectors driven by a loss matrix.

    `losses` has shape (q_n, n) with losses[i, t-1] the loss of expert i+1 at
    step t (entries above the live count are ignored and may be NaN).  Returns
    n + 1 vectors: index 0 is the initial (1,) vector, index t the weights
    after the update at step t, of length ensemble_size(t, tau).
    """
    losses = np.asarray(losses, dtype=float)
    n = losses.shape[1]
    w = np.ones(1)
    out = [w.copy()]
    for t in range(1, n + 1):
        q_t = ensemble_size(t, cfg.tau)
        if w.size < q_t:
            w = np.concatenate([w, np.zeros(q_t - w.size)])
        v = w * np.exp(-cfg.eta * losses[:q_t, t - 1])
        w = _normalized(_share_update(v, cfg.alpha))
        out.append(w.copy())
    return out


@dataclass
class RunResult:
    """Full record of one aggregator run over a series."""

    config: AggregatorConfig
    expert_spec: ExpertSpec
    loss_fn: LossFunction
    outcomes: np.ndarray
    steps: list[StepResult] = field(default_factory=list)
    loss_matrix: np.ndarray | None = None  # (q_final, n), NaN where not live

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def q_final(self) -> int:
        return int(self.loss_matrix.shape[0])

    @property
    def forecasts(self) -> np.ndarray:
        return np.array([s.forecast for s in self.steps])

    @property
    def forecaster_losses(self) -> np.ndarray:
        return np.array([s.loss for s in self.steps])

    @property
    def forecaster_cum_loss(self) -> float:
        return float(self.forecaster_losses.sum())


def _window_start(j: int, tau: int) -> int:
    """First observation index expert j (1-based) may train on."""
    return 1 if j <= 2 else (j - 2) * tau + 1


def _spawn_growing(spec: ExpertSpec, j: int, tau: int, values: np.ndarray,
                   bounds: tuple[float, float]) -> Expert:
    """Expert j joining at step (j-1)*tau, trained on its window so far."""
    ws = _window_start(j, tau)
    birth = 0 if j == 1 else (j - 1) * tau - 1
    history = values[ws - 1:birth] if birth >= ws else []
    return spawn(spec, birth, ws, list(history), bounds)


def run(series: TimeSeries, cfg: AggregatorConfig, spec: ExpertSpec,
        lf: LossFunction) -> RunResult:
    """Run an aggregator over a series, spawning and feeding experts.

    Growing mode starts from a single expert and adds one per epoch; the
    expert joining at step k*tau trains on observations from (k-1)*tau + 1
    onward.  Static modes (ewaf, fixed_shares) instantiate the same windowed
    expert family the growing run would end with, all live from the first
    step with uniform initial weights.

    Returns the per-step records plus the expert loss matrix (NaN where an
    expert was not yet live), which downstream regret analysis consumes.
    """
    values = series.values
    n = len(series)
    bounds = (lf.lo, lf.hi)
    q_final = ensemble_size(n, cfg.tau)
    loss_matrix = np.full((q_final, n), np.nan)
    result = RunResult(cfg, spec, lf, outcomes=values.copy())

    if cfg.mode == "growing":
        experts: list[Expert] = [_spawn_growing(spec, 1, cfg.tau, values, bounds)]
        weights = np.ones(1)
        for t in range(1, n + 1):
            q_t = ensemble_size(t, cfg.tau)
            while len(experts) < q_t:
                experts.append(_spawn_growing(spec, len(experts) + 1, cfg.tau, values, bounds))
            forecasts = np.array([e.predict() for e in experts])
            step = growing_step(weights, forecasts, values[t - 1], t, lf, cfg)
            weights = step.weights
            loss_matrix[:q_t, t - 1] = step.expert_losses
            result.steps.append(step)
            for e in experts:
                e.observe(values[t - 1])
    else:
        experts = [
            spawn(spec, 0, _window_start(j, cfg.tau), [], bounds)
            for j in range(1, q_final + 1)
        ]
        weights = np.full(q_final, 1.0 / q_final)
        step_fn = ewaf_step if cfg.mode == "ewaf" else fixed_shares_step
        for t in range(1, n + 1):
            forecasts = np.array([e.predict() for e in experts])
            step = step_fn(weights, forecasts, values[t - 1], lf, cfg, t=t)
            weights = step.weights
            loss_matrix[:, t - 1] = step.expert_losses
            result.steps.append(step)
            for e in experts:
                if t >= e.window_start:
                    e.observe(values[t - 1])

    result.loss_matrix = loss_matrix
    return result
