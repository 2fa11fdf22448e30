"""Tracking regret: switch-budget oracle, sequence-space check, bound evaluators.

Two independent routes are kept deliberately separate here:

* `best_sequence` / `best_sequence_all_m` find the lowest-loss expert
  sequence with a bounded number of switches by dynamic programming, and
  `enumerate_sequences` provides the brute-force enumeration used to verify
  the dynamic program on small instances.
* `sequence_ewaf_marginals` materializes every admissible expert sequence,
  runs exponentially weighted averaging over the sequences themselves, and
  marginalizes the sequence weights onto experts.  Its per-step marginals
  must coincide with the growing fixed-shares weight trajectory; that
  equality is the central exactness check of this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import AggregatorConfig, RunResult, ensemble_size, growing_weight_trajectory

ETA_FLOOR = 1e-6

SEQUENCE_GUARD = 1_000_000


@dataclass(frozen=True)
class LossMatrix:
    """Per-expert, per-step losses in [0, 1] with an availability mask.

    With an epoch length `tau`, expert i is live at step t exactly when
    i <= 1 + floor(t / tau); entries outside that mask must be NaN.  With
    tau=None every expert is live at every step (static ensembles).
    """

    losses: np.ndarray
    tau: int | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.losses, dtype=float)
        object.__setattr__(self, "losses", arr)
        if arr.ndim != 2 or arr.shape[1] < 1 or arr.shape[0] < 1:
            raise ValueError("loss matrix must be (experts, steps) with both positive")
        live = self.live_counts()
        for t in range(self.n):
            col = arr[:, t]
            head = col[: live[t]]
            if not (np.all(np.isfinite(head)) and np.all(head >= 0) and np.all(head <= 1)):
                raise ValueError(f"losses at step {t + 1} must be finite in [0, 1] for live experts")
            if np.any(np.isfinite(col[live[t]:])):
                raise ValueError(f"step {t + 1} has loss entries for experts not yet live")

    @property
    def q(self) -> int:
        return int(self.losses.shape[0])

    @property
    def n(self) -> int:
        return int(self.losses.shape[1])

    def live_counts(self) -> np.ndarray:
        """Number of live experts at steps 1..n."""
        if self.tau is None:
            return np.full(self.n, self.q, dtype=int)
        counts = np.array([ensemble_size(t, self.tau) for t in range(1, self.n + 1)])
        return np.minimum(counts, self.q)

    def start_count(self) -> int:
        """How many experts a comparator sequence may start from."""
        return 1 if self.tau is not None else self.q

    def filled(self) -> np.ndarray:
        """Losses with NaN replaced by zero (masked entries are never read)."""
        return np.nan_to_num(self.losses, nan=0.0)


def loss_matrix_from_run(run: RunResult) -> LossMatrix:
    tau = run.config.tau if run.config.mode == "growing" else None
    return LossMatrix(run.loss_matrix, tau=tau)


def random_loss_matrix(n: int, tau: int, rng: np.random.Generator) -> LossMatrix:
    """Uniform[0, 1] losses for a growing ensemble, NaN where not live."""
    q_n = ensemble_size(n, tau)
    losses = rng.random((q_n, n))
    for t in range(1, n + 1):
        losses[ensemble_size(t, tau):, t - 1] = np.nan
    return LossMatrix(losses, tau=tau)


# ---------------------------------------------------------------------------
# switch-budget oracle (dynamic program plus exhaustive verification route)


def best_sequence(lm: LossMatrix, m: int) -> tuple[float, list[int]]:
    """Lowest total loss over expert sequences with at most m switches.

    Sequences start from an expert live at step 1 (the single initial expert
    for growing ensembles) and may only use experts already live at each
    step.  Ties are broken toward the lower expert index, then toward fewer
    switches.  Returns (total loss, 1-based expert path).
    """
    if m < 0:
        raise ValueError("switch budget m must be nonnegative")
    n, q = lm.n, lm.q
    if m > n - 1:
        raise ValueError(f"switch budget m={m} exceeds n-1={n - 1}")
    losses = lm.filled()
    live = lm.live_counts()
    inf = math.inf

    # value[i][s]: best loss of prefixes ending at expert i having used s switches
    value = [[inf] * (m + 1) for _ in range(q)]
    for i in range(lm.start_count()):
        value[i][0] = losses[i, 0]
    parents: list[list[list[tuple[int, int]]]] = []

    for t in range(1, n):
        new = [[inf] * (m + 1) for _ in range(q)]
        back = [[(-1, -1)] * (m + 1) for _ in range(q)]
        # best and second-best predecessor per switch count, for switch moves
        best1 = [inf] * (m + 1)
        arg1 = [-1] * (m + 1)
        best2 = [inf] * (m + 1)
        for s in range(m + 1):
            for j in range(live[t - 1]):
                val = value[j][s]
                if val < best1[s]:
                    best2[s] = best1[s]
                    best1[s], arg1[s] = val, j
                elif val < best2[s]:
                    best2[s] = val
        for i in range(live[t]):
            step_loss = losses[i, t]
            for s in range(m + 1):
                stay = value[i][s] if i < live[t - 1] else inf
                if s > 0:
                    other = best1[s - 1] if arg1[s - 1] != i else best2[s - 1]
                else:
                    other = inf
                if stay <= other:
                    cand, prev = stay, (i, s)
                else:
                    cand, prev = other, (arg1[s - 1] if arg1[s - 1] != i else _second_arg(value, s - 1, i, live[t - 1]), s - 1)
                if cand < inf:
                    new[i][s] = cand + step_loss
                    back[i][s] = prev
        value = new
        parents.append(back)

    best_val, end = inf, (-1, -1)
    for s in range(m + 1):
        for i in range(live[n - 1]):
            if (value[i][s], i, s) < (best_val, *end):
                best_val, end = value[i][s], (i, s)
    if not best_val < inf:
        raise RuntimeError("no admissible expert sequence")

    path = [0] * n
    i, s = end
    for t in range(n - 1, 0, -1):
        path[t] = i + 1
        i, s = parents[t - 1][i][s]
    path[0] = i + 1
    return float(best_val), path


def _second_arg(value: list[list[float]], s: int, skip: int, live: int) -> int:
    best, arg = math.inf, -1
    for j in range(live):
        if j != skip and value[j][s] < best:
            best, arg = value[j][s], j
    return arg


def best_sequence_all_m(lm: LossMatrix) -> np.ndarray:
    """Oracle losses for every switch budget m = 0..n-1 at once (values only).

    Vectorized over experts and switch counts; used where the whole regret
    profile is needed and paths are not.
    """
    n, q = lm.n, lm.q
    losses = lm.filled()
    live = lm.live_counts()
    inf = np.inf

    value = np.full((q, n), inf)
    value[: lm.start_count(), 0] = losses[: lm.start_count(), 0]
    for t in range(1, n):
        best1 = value.min(axis=0)
        arg1 = value.argmin(axis=0)
        second = np.partition(value, 1, axis=0)[1] if q > 1 else np.full(n, inf)
        other = np.where(np.arange(q)[:, None] == arg1[None, :], second[None, :], best1[None, :])
        switched = np.full((q, n), inf)
        switched[:, 1:] = other[:, :-1]
        new = np.minimum(value, switched)
        new[live[t]:, :] = inf
        new[: live[t], :] += losses[: live[t], t][:, None]
        value = new
    per_switch = value.min(axis=0)
    return np.minimum.accumulate(per_switch)


def count_sequences(n: int, tau: int, comparator: bool = True) -> int:
    """Number of admissible expert sequences of length n.

    `comparator=True` counts the regret-comparator class (an expert is usable
    from its birth step); False counts the sequence-measure class used by the
    averaging oracle (an expert is usable only after its birth step).
    """
    total = 1
    for t in range(2, n + 1):
        total *= ensemble_size(t if comparator else t - 1, tau)
    return total


def enumerate_sequences(n: int, tau: int, comparator: bool = True,
                        guard: int = SEQUENCE_GUARD) -> np.ndarray:
    """All admissible expert sequences as a (count, n) 1-based index matrix."""
    total = count_sequences(n, tau, comparator)
    if total > guard:
        raise ValueError(
            f"{total} admissible sequences exceeds the enumeration guard of {guard}; "
            "use a smaller n or a larger tau"
        )
    seqs = np.ones((1, 1), dtype=np.int64)
    for t in range(2, n + 1):
        c = ensemble_size(t if comparator else t - 1, tau)
        reps = seqs.shape[0]
        seqs = np.column_stack([
            np.repeat(seqs, c, axis=0),
            np.tile(np.arange(1, c + 1, dtype=np.int64), reps),
        ])
    return seqs


def best_sequence_brute_force(lm: LossMatrix, m: int,
                              guard: int = SEQUENCE_GUARD) -> float:
    """Exhaustive-enumeration value of the switch-budget oracle (growing only)."""
    if lm.tau is None:
        raise ValueError("brute-force enumeration is defined for growing loss matrices")
    seqs = enumerate_sequences(lm.n, lm.tau, comparator=True, guard=guard)
    losses = lm.filled()
    totals = losses[seqs - 1, np.arange(lm.n)[None, :]].sum(axis=1)
    switches = (np.diff(seqs, axis=1) != 0).sum(axis=1)
    admissible = switches <= m
    if not admissible.any():
        raise RuntimeError("no admissible expert sequence")
    return float(totals[admissible].min())


# ---------------------------------------------------------------------------
# sequence-space averaging oracle


def sequence_ewaf_marginals(lm: LossMatrix, cfg: AggregatorConfig,
                            guard: int = SEQUENCE_GUARD) -> list[np.ndarray]:
    """Expert marginals of exponentially weighted averaging over sequences.

    Enumerates every sequence the growing forecaster implicitly averages
    over (an expert becomes usable the step after it joins), gives sequence
    s the initial weight  prod_t [alpha/q_t + (1-alpha) * 1{no switch}],
    multiplies in exp(-eta * loss) per step, and sums the sequence weights
    onto the expert used at the next step.  Entry t of the result is the
    normalized marginal over experts at position t+1, for t = 0..n-1.
    """
    if lm.tau is None:
        raise ValueError("the sequence-space oracle is defined for growing loss matrices")
    tau = cfg.tau
    n = lm.n
    seqs = enumerate_sequences(n, tau, comparator=False, guard=guard)
    phi = np.ones(seqs.shape[0])
    for t in range(1, n):  # extension from position t to t+1
        share = cfg.alpha / ensemble_size(t, tau)
        phi *= share + (1.0 - cfg.alpha) * (seqs[:, t] == seqs[:, t - 1])

    losses = lm.filled()
    marginals = []
    for t in range(n):
        live = ensemble_size(t, tau)
        marginal = np.bincount(seqs[:, t] - 1, weights=phi, minlength=live)[:live]
        total = marginal.sum()
        if not total > 0:
            raise RuntimeError("sequence weights vanished")
        marginals.append(marginal / total)
        phi = phi * np.exp(-cfg.eta * losses[seqs[:, t] - 1, t])
    return marginals


def equivalence_max_diff(lm: LossMatrix, cfg: AggregatorConfig,
                         guard: int = SEQUENCE_GUARD) -> float:
    """Largest deviation between the fixed-shares weights and the oracle.

    Compares the normalized growing-ensemble weight trajectory against the
    sequence-space marginals at every step; exact agreement (up to float
    noise) is the defining property of the growing forecaster.
    """
    marginals = sequence_ewaf_marginals(lm, cfg, guard=guard)
    trajectory = growing_weight_trajectory(lm.losses, cfg)
    worst = 0.0
    for t, marginal in enumerate(marginals):
        diff = np.max(np.abs(trajectory[t] - marginal))
        worst = max(worst, float(diff))
    return worst


# ---------------------------------------------------------------------------
# bound evaluators


def binary_entropy(p: float) -> float:
    """Natural-log binary entropy with the 0*ln(0) = 0 convention."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {p}")
    h = 0.0
    if p > 0:
        h -= p * math.log(p)
    if p < 1:
        h -= (1 - p) * math.log(1 - p)
    return h


def tracking_regret_bound(n: int, m: int, q_n: int, alpha: float, eta: float) -> float:
    """Worst-case tracking regret of the growing fixed-shares forecaster.

    (m/eta) * ln(q_n) - (1/eta) * ln(alpha^m * (1-alpha)^(n-m)) + eta*n/8,
    for losses in [0, 1] and comparator sequences with m switches.  Returns
    +inf for the degenerate corners (alpha = 0 with m >= 1, alpha = 1 with
    m < n).
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if (m >= 1 and alpha == 0.0) or (n - m >= 1 and alpha == 1.0):
        return math.inf
    log_initial = 0.0
    if m >= 1:
        log_initial += m * math.log(alpha)
    if n - m >= 1:
        log_initial += (n - m) * math.log(1.0 - alpha)
    return (m / eta) * math.log(q_n) - log_initial / eta + eta * n / 8.0


@dataclass(frozen=True)
class TunedParameters:
    """Share rate, learning rate, and the regret guarantee they achieve."""

    alpha: float
    eta: float
    bound: float


def tune_parameters(n: int, m: int, q_n: int) -> TunedParameters:
    """Horizon-tuned control settings for a given switch budget.

    alpha = m/(n-1) and eta chosen to balance the bound, giving a regret
    guarantee of sqrt((n/2) * ((n-1)H(alpha) - ln(1-alpha) + m ln q_n)).
    With m = 0 every term vanishes; eta is floored at a tiny positive value
    so the update stays well defined.
    """
    if n < 2:
        raise ValueError("tuning needs n >= 2")
    if not 0 <= m <= n - 1:
        raise ValueError(f"switch budget m={m} must lie in [0, n-1]")
    alpha = m / (n - 1)
    if alpha < 1.0:
        inner = (n - 1) * binary_entropy(alpha) - math.log(1.0 - alpha) + m * math.log(q_n)
    else:
        inner = math.inf
    eta = math.sqrt((8.0 / n) * inner) if math.isfinite(inner) else math.inf
    bound = math.sqrt((n / 2.0) * inner) if math.isfinite(inner) else math.inf
    return TunedParameters(alpha=alpha, eta=max(eta, ETA_FLOOR), bound=bound)


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class RegretReport:
    """Realized losses, oracle comparison, and bound values for one run."""

    forecaster_cum_loss: float
    oracle_loss: float
    oracle_path: list[int]
    tracking_regret: float
    regret_bound: float
    tuned: TunedParameters
    m_used: int

    def to_dict(self) -> dict:
        return {
            "forecaster_cum_loss": self.forecaster_cum_loss,
            "oracle_loss": self.oracle_loss,
            "oracle_path": list(self.oracle_path),
            "tracking_regret": self.tracking_regret,
            "regret_bound": self.regret_bound,
            "tuned_alpha": self.tuned.alpha,
            "tuned_eta": self.tuned.eta,
            "tuned_bound": self.tuned.bound,
            "m_used": self.m_used,
        }


def report(run: RunResult, m: int) -> RegretReport:
    """Regret report for a completed run against the best m-switch sequence.

    The worst-case bound is evaluated at the alpha and eta the run actually
    used, so the empirical comparison stays honest under user overrides; the
    tuned parameters for (n, m) are reported alongside.  A budget beyond
    n - 1 switches is clamped (no sequence can switch more often).
    """
    lm = loss_matrix_from_run(run)
    n = run.n
    m_used = min(m, n - 1)
    oracle_loss, path = best_sequence(lm, m_used)
    cum = run.forecaster_cum_loss
    q_n = lm.q
    bound = tracking_regret_bound(n, m_used, q_n, run.config.alpha, run.config.eta)
    tuned = tune_parameters(n, m_used, q_n) if n >= 2 else TunedParameters(0.0, ETA_FLOOR, 0.0)
    return RegretReport(
        forecaster_cum_loss=cum,
        oracle_loss=oracle_loss,
        oracle_path=path,
        tracking_regret=cum - oracle_loss,
        regret_bound=bound,
        tuned=tuned,
        m_used=m_used,
    )
