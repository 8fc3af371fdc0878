"""Resolves training-step windows and quantifies cross-step predictability.

Steps come from explicit op labels when present; otherwise a single dominant
period is inferred by normalized autocorrelation of a telemetry signal and
windows are tiled from the first op's start. GPU utilization is the default
signal because it carries the strongest step structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Sequence

import numpy as np

from .errors import NoCompleteSteps, NoSteps, SignalTooShort
from .model import Run, StepWindow

SIGNALS = ("gpu_util", "cpu_avg_util", "power_sys")

# Minimum autocorrelation peak for accepting an inferred period; conservative,
# favors explicit labels.
PERIOD_CONFIDENCE_THRESHOLD = 0.5

_MIN_SAMPLES = 8


@dataclass(frozen=True)
class PeriodEstimate:
    period_us: int
    confidence: float
    method: str  # "explicit" | "autocorrelation"


@dataclass(frozen=True)
class PredictabilityScore:
    signal: str
    mean_pairwise_correlation: float
    per_step_pairs: int


def signal_values(run: Run, signal: str) -> np.ndarray:
    """Per-sample values of one of the supported telemetry signals."""
    if signal == "gpu_util":
        return np.array([s.gpu_util for s in run.samples], dtype=float)
    if signal == "cpu_avg_util":
        return np.array(
            [fsum(s.cpu_core_util) / len(s.cpu_core_util) for s in run.samples], dtype=float
        )
    if signal == "power_sys":
        return np.array([s.power_sys_mw for s in run.samples], dtype=float)
    raise ValueError(f"unknown signal {signal!r}, expected one of {SIGNALS}")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    # Equal arrays correlate perfectly by definition; this also covers the
    # identical-constant case where the usual formula is 0/0.
    if np.array_equal(a, b):
        return 1.0
    ca = a - a.mean()
    cb = b - b.mean()
    denom = np.sqrt((ca * ca).sum() * (cb * cb).sum())
    if denom == 0.0:
        return 0.0
    r = float((ca * cb).sum() / denom)
    return max(-1.0, min(1.0, r))


def estimate_period_from_series(values: np.ndarray, interval_us: int) -> PeriodEstimate:
    """Dominant period of a uniformly sampled series via lagged Pearson autocorrelation.

    Scans lags in [2, n//2] on the mean-centered, variance-normalized signal,
    so the result is invariant under affine scaling a*x + b with a > 0. Ties
    within 1e-9 resolve to the smallest lag, which keeps the fundamental
    period ahead of its harmonics. Sub-sample resolution comes from parabolic
    interpolation around the peak lag.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < _MIN_SAMPLES:
        raise SignalTooShort(f"need at least {_MIN_SAMPLES} samples, got {n}")
    x = x - x.mean()
    if not np.any(x):
        # Flat signal: no periodicity exists.
        return PeriodEstimate(period_us=2 * interval_us, confidence=0.0, method="autocorrelation")

    max_lag = n // 2
    lags = np.arange(2, max_lag + 1)
    # Lagged sums via one full autocorrelation plus cumulative sums; r(L) is
    # the exact Pearson coefficient between x[:-L] and x[L:].
    dots = np.correlate(x, x, mode="full")[n - 1 + lags]
    c1 = np.cumsum(x)
    c2 = np.cumsum(x * x)
    m = (n - lags).astype(float)
    head_sum = c1[n - lags - 1]
    tail_sum = c1[-1] - c1[lags - 1]
    head_sq = c2[n - lags - 1]
    tail_sq = c2[-1] - c2[lags - 1]
    num = dots - head_sum * tail_sum / m
    var_head = head_sq - head_sum**2 / m
    var_tail = tail_sq - tail_sum**2 / m
    denom = np.sqrt(np.maximum(var_head, 0.0) * np.maximum(var_tail, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0.0, num / denom, 0.0)
    r = np.clip(r, -1.0, 1.0)

    peak = float(r.max())
    best_i = int(np.argmax(r >= peak - 1e-9))  # smallest lag within tolerance
    best_lag = int(lags[best_i])

    period_samples = float(best_lag)
    # A peak of exactly 1 means the signal repeats exactly at this integer
    # lag; parabolic refinement would only import asymmetry from the
    # different overlap lengths of the neighboring lags.
    if peak < 1.0 - 1e-12 and 0 < best_i < len(lags) - 1:
        r_prev, r_mid, r_next = float(r[best_i - 1]), float(r[best_i]), float(r[best_i + 1])
        curvature = r_prev - 2.0 * r_mid + r_next
        if curvature < 0.0:
            delta = 0.5 * (r_prev - r_next) / curvature
            if abs(delta) <= 0.5:
                period_samples = best_lag + delta

    period_us = max(1, int(round(period_samples * interval_us)))
    confidence = max(0.0, min(1.0, peak))
    return PeriodEstimate(period_us=period_us, confidence=confidence, method="autocorrelation")


def detect_period(run: Run, signal: str = "gpu_util") -> PeriodEstimate:
    """Estimate the dominant period of a run's telemetry signal.

    The signal is first resampled onto a uniform grid at the run's nominal
    sample interval so that jittered samplers do not distort lag lengths.
    """
    interval = run.meta.sample_interval_us
    ts = np.array([s.t for s in run.samples], dtype=float)
    if ts.size < _MIN_SAMPLES:
        raise SignalTooShort(f"need at least {_MIN_SAMPLES} samples, got {ts.size}")
    vals = signal_values(run, signal)
    n_grid = int((ts[-1] - ts[0]) // interval) + 1
    if n_grid < _MIN_SAMPLES:
        raise SignalTooShort("run spans fewer than the minimum number of sample intervals")
    grid = ts[0] + interval * np.arange(n_grid)
    resampled = np.interp(grid, ts, vals)
    return estimate_period_from_series(resampled, interval)


def explicit_period(steps: Sequence[StepWindow]) -> PeriodEstimate:
    """Period implied by explicit step windows: mean window duration."""
    if not steps:
        raise NoSteps("no step windows")
    mean_dur = fsum(w.duration_us for w in steps) / len(steps)
    return PeriodEstimate(period_us=int(round(mean_dur)), confidence=1.0, method="explicit")


def resolve_steps(run: Run, signal: str = "gpu_util") -> tuple[StepWindow, ...]:
    """Resolve step windows from op labels, or infer them by period tiling.

    With labeled ops, each step window spans [min start, max end] of its ops.
    Without labels, the detected period tiles complete windows from the first
    op's start; detection below the confidence threshold raises NoSteps. The
    first ``meta.warmup_steps`` windows are flagged as warmup.
    """
    labeled = [op for op in run.ops if op.step_id is not None]
    if labeled:
        bounds: dict[int, list[int]] = {}
        for op in labeled:
            b = bounds.setdefault(op.step_id, [op.start, op.end])
            b[0] = min(b[0], op.start)
            b[1] = max(b[1], op.end)
        windows = [
            StepWindow(step_id=sid, start=lo, end=hi) for sid, (lo, hi) in sorted(bounds.items())
        ]
        for prev, cur in zip(windows, windows[1:]):
            if cur.start < prev.end:
                raise ValueError(
                    f"step windows {prev.step_id} and {cur.step_id} overlap; "
                    "labeled op intervals are inconsistent"
                )
    else:
        estimate = detect_period(run, signal)
        if estimate.confidence < PERIOD_CONFIDENCE_THRESHOLD:
            raise NoSteps(
                f"no step labels and period confidence {estimate.confidence:.3f} "
                f"below threshold {PERIOD_CONFIDENCE_THRESHOLD}"
            )
        period = estimate.period_us
        start = run.ops[0].start
        end = run.end_us
        count = (end - start) // period
        if count < 1:
            raise NoSteps("inferred period does not fit a single complete window")
        windows = [
            StepWindow(step_id=i, start=start + i * period, end=start + (i + 1) * period)
            for i in range(count)
        ]

    warmup = run.meta.warmup_steps
    return tuple(
        StepWindow(w.step_id, w.start, w.end, is_warmup=i < warmup)
        for i, w in enumerate(windows)
    )


def predictability(
    run: Run, steps: Sequence[StepWindow], signal: str = "gpu_util"
) -> PredictabilityScore:
    """Mean pairwise Pearson correlation of the per-step signal.

    Each step's samples are linearly resampled to the shortest step's sample
    count (avoids extrapolation), then all unordered step pairs are scored.
    Defined only when at least two complete non-warmup steps exist.
    """
    windows = [w for w in steps if not w.is_warmup]
    if len(windows) < 2:
        raise NoCompleteSteps(
            f"predictability needs >= 2 non-warmup steps, got {len(windows)}"
        )
    ts = np.array([s.t for s in run.samples])
    vals = signal_values(run, signal)
    segments = []
    for w in windows:
        seg = vals[(ts >= w.start) & (ts < w.end)]
        segments.append(seg)
    target = min(len(seg) for seg in segments)
    if target < 2:
        raise SignalTooShort("shortest step contains fewer than 2 samples")
    resampled = [
        np.interp(np.linspace(0.0, len(seg) - 1.0, target), np.arange(len(seg)), seg)
        for seg in segments
    ]
    scores = [
        _pearson(resampled[i], resampled[j])
        for i in range(len(resampled))
        for j in range(i + 1, len(resampled))
    ]
    return PredictabilityScore(
        signal=signal,
        mean_pairwise_correlation=fsum(scores) / len(scores),
        per_step_pairs=len(scores),
    )
