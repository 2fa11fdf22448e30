"""Time-series ingestion, growth-rate transform, and synthetic generators."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

TRANSFORMS = ("raw", "log_diff_pct")


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real observations y_1..y_n with a transform tag and provenance."""

    values: np.ndarray
    transform: str = "raw"
    source: str = ""

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("a time series needs at least one observation")
        if not np.all(np.isfinite(vals)):
            raise ValueError("time series contains non-finite values")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")

    def __len__(self) -> int:
        return int(self.values.size)


def load_csv(path: str, column: str) -> TimeSeries:
    """Read one numeric column of a headered CSV file into a TimeSeries.

    Blank or non-numeric cells are an error that names the offending row.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file (a header row is required)")
        if column not in reader.fieldnames:
            raise ValueError(f"{path}: column {column!r} not found (have {reader.fieldnames})")
        values = []
        for rownum, row in enumerate(reader, start=2):
            cell = (row.get(column) or "").strip()
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: row {rownum}: cannot parse {cell!r} as a number") from None
    if not values:
        raise ValueError(f"{path}: no data rows")
    return TimeSeries(np.array(values), transform="raw", source=path)


def growth_rate(ts: TimeSeries) -> TimeSeries:
    """Log-difference growth in percent: g_t = 100*ln(y_{t+1}/y_t), length n-1."""
    if len(ts) < 2:
        raise ValueError("growth rate needs at least two observations")
    vals = ts.values
    if np.any(vals <= 0):
        bad = int(np.argmax(vals <= 0)) + 1
        raise ValueError(f"growth rate requires strictly positive values (observation {bad} is {vals[bad - 1]})")
    g = 100.0 * np.diff(np.log(vals))
    return TimeSeries(g, transform="log_diff_pct", source=ts.source)


@dataclass(frozen=True)
class SegmentSpec:
    """One autoregressive regime: y_t = intercept + sum_j ar[j]*y_{t-j-1} + noise."""

    length: int
    ar: tuple[float, ...] = ()
    intercept: float = 0.0
    noise_sd: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        if self.length < 1:
            raise ValueError("segment length must be positive")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.ar and _spectral_radius(self.ar) >= 1.0:
            raise ValueError(f"AR coefficients {self.ar} are not stationary (spectral radius >= 1)")


def _spectral_radius(ar: tuple[float, ...]) -> float:
    p = len(ar)
    if p == 1:
        return abs(ar[0])
    companion = np.zeros((p, p))
    companion[0, :] = ar
    companion[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


@dataclass(frozen=True)
class SyntheticSpec:
    """Piecewise-AR generator: concatenated regimes, deterministic under `seed`.

    Each segment continues from the tail of the series so far (zeros before the
    first observation).  `start`, when given, overrides the first values, which
    is handy for pinning noiseless examples.
    """

    segments: tuple[SegmentSpec, ...]
    seed: int = 0
    start: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        segs = tuple(
            s if isinstance(s, SegmentSpec) else SegmentSpec(**s) for s in self.segments
        )
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        if not segs:
            raise ValueError("need at least one segment")

    @property
    def total_length(self) -> int:
        return sum(s.length for s in self.segments)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        known = {"segments", "seed", "start"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown synthetic-spec keys: {sorted(extra)}")
        if "segments" not in d:
            raise ValueError("synthetic spec needs a 'segments' array")
        segs = tuple(SegmentSpec(**s) for s in d["segments"])
        return cls(segments=segs, seed=int(d.get("seed", 0)), start=tuple(d.get("start", ())))

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"length": s.length, "ar": list(s.ar), "intercept": s.intercept, "noise_sd": s.noise_sd}
                for s in self.segments
            ],
            "seed": self.seed,
            "start": list(self.start),
        }


def generate(spec: SyntheticSpec, seed: int | None = None) -> TimeSeries:
    """Simulate the piecewise-AR series described by `spec`.

    Uses numpy's PCG64 generator so identical (spec, seed) pairs reproduce the
    same series on any platform.  `seed` overrides the seed stored in the spec.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    out: list[float] = []
    for seg in spec.segments:
        for _ in range(seg.length):
            t = len(out)
            if t < len(spec.start):
                out.append(spec.start[t])
                continue
            y = seg.intercept
            for j, a in enumerate(seg.ar, start=1):
                y += a * (out[t - j] if t - j >= 0 else 0.0)
            if seg.noise_sd > 0:
                y += seg.noise_sd * rng.standard_normal()
            out.append(y)
    return TimeSeries(np.array(out), transform="raw", source=f"synthetic:seed={spec.seed if seed is None else seed}")
