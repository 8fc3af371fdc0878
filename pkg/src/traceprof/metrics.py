"""Computes the metric suite from a validated run.

Utilization, idle-ratio and energy metrics are evaluated over an analysis
window that excludes warmup steps; peak memory is taken over the full run
because allocation spikes during warmup are real feasibility constraints.
Every report states both choices in its notes.

Energy uses the rectangle rule over the samples actually present in the
file: each sample's weight is the gap to the next sample, the run's last
sample falls back to the nominal interval. The same weights drive the
time-weighted utilization means, so binary utilization streams reduce
exactly to active-sample-count / total-count.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from math import fsum
from typing import Sequence

from . import steps as steps_mod
from .correlate import attribute_samples, concurrent_ops_exist
from .errors import NoCompleteSteps, NoSamplesInWindow, SignalTooShort
from .model import MemoryBreakdown, Run, StepWindow
from .steps import PeriodEstimate, PredictabilityScore

RAILS = ("cpu", "gpu", "mem", "sys")

Window = tuple[int, int]


@dataclass(frozen=True)
class RailShare:
    rail: str
    mean_mw: float
    share_of_sys: float


@dataclass(frozen=True)
class OpAggregate:
    count: int
    busy_time_us: int
    attributed_samples: int
    below_sampling_resolution: bool


@dataclass(frozen=True)
class StepMetrics:
    step_id: int
    is_warmup: bool
    start: int
    end: int
    per_core_util: tuple[float, ...]
    cpu_avg_util: float
    gpu_util: float
    idle_ratio_per_core: tuple[float, ...]
    energy_by_rail_joules: dict[str, float]
    throughput_samples_per_sec: float


@dataclass(frozen=True)
class MetricReport:
    run_id: str
    batch_size: int
    core_count: int
    sample_interval_us: int
    warmup_steps: int
    per_core_util: tuple[float, ...]
    cpu_avg_util: float
    gpu_util: float
    idle_ratio_per_core: tuple[float, ...]
    energy_by_rail_joules: dict[str, float]
    peak_mem_bytes: int
    throughput_samples_per_sec: float | None
    steps: tuple[StepWindow, ...]
    per_step: tuple[StepMetrics, ...]
    per_op: dict[str, OpAggregate]
    power_rail_ranking: tuple[RailShare, ...]
    period: PeriodEstimate | None
    predictability: PredictabilityScore | None
    memory_breakdown: MemoryBreakdown | None
    concurrent_ops_double_counting: bool
    idle_threshold: float
    notes: tuple[str, ...]


def sample_weights_us(run: Run) -> list[int]:
    """Rectangle width per sample: gap to the next sample; last uses nominal."""
    ts = [s.t for s in run.samples]
    gaps = [b - a for a, b in zip(ts, ts[1:])]
    gaps.append(run.meta.sample_interval_us)
    return gaps


def nonwarmup_window(step_windows: Sequence[StepWindow]) -> Window:
    """Analysis window spanning the first non-warmup step to the last step."""
    non_warmup = [w for w in step_windows if not w.is_warmup]
    if not non_warmup:
        raise NoSamplesInWindow("all step windows are warmup; nothing to analyze")
    return (non_warmup[0].start, step_windows[-1].end)


def _window_indices(run: Run, window: Window | None) -> range:
    if window is None:
        return range(len(run.samples))
    lo, hi = window
    ts = [s.t for s in run.samples]
    start = bisect_left(ts, lo)
    end = bisect_left(ts, hi)
    if start >= end:
        raise NoSamplesInWindow(f"no samples with t in [{lo}, {hi}) us")
    return range(start, end)


def _weighted_mean(run: Run, values: Sequence[float], window: Window | None) -> float:
    idx = _window_indices(run, window)
    dts = sample_weights_us(run)
    num = fsum(values[i] * dts[i] for i in idx)
    den = fsum(dts[i] for i in idx)
    return num / den


def cpu_core_utilization(run: Run, core_index: int, window: Window | None = None) -> float:
    """Time-weighted mean utilization of one core over the window."""
    if not 0 <= core_index < run.meta.core_count:
        raise ValueError(f"core_index {core_index} outside 0..{run.meta.core_count - 1}")
    values = [s.cpu_core_util[core_index] for s in run.samples]
    return _weighted_mean(run, values, window)


def cpu_avg_utilization(run: Run, window: Window | None = None) -> float:
    """Arithmetic mean of per-core utilizations over all cores."""
    per_core = [cpu_core_utilization(run, c, window) for c in range(run.meta.core_count)]
    return fsum(per_core) / len(per_core)


def gpu_utilization(run: Run, window: Window | None = None) -> float:
    values = [s.gpu_util for s in run.samples]
    return _weighted_mean(run, values, window)


def idle_ratio(
    run: Run, core_index: int, window: Window | None = None, threshold: float = 0.0
) -> float:
    """Fraction of window sample time where the core's utilization is idle.

    Idle means exactly zero by default; ``threshold`` loosens that to
    utilization <= threshold for noisy samplers.
    """
    if not 0 <= core_index < run.meta.core_count:
        raise ValueError(f"core_index {core_index} outside 0..{run.meta.core_count - 1}")
    idx = _window_indices(run, window)
    dts = sample_weights_us(run)
    idle_us = fsum(
        dts[i] for i in idx if run.samples[i].cpu_core_util[core_index] <= threshold
    )
    total_us = fsum(dts[i] for i in idx)
    return idle_us / total_us


_RAIL_ATTR = {
    "cpu": "power_cpu_mw",
    "gpu": "power_gpu_mw",
    "mem": "power_mem_mw",
    "sys": "power_sys_mw",
}


def energy(run: Run, rail: str, window: Window | None = None) -> float:
    """Rectangle-rule energy of a power rail over the window, in joules."""
    if rail not in _RAIL_ATTR:
        raise ValueError(f"unknown rail {rail!r}, expected one of {RAILS}")
    attr = _RAIL_ATTR[rail]
    idx = _window_indices(run, window)
    dts = sample_weights_us(run)
    # mW * us sums to nanojoules; divide by the exact constant 1e9 once.
    return fsum(getattr(run.samples[i], attr) * dts[i] for i in idx) / 1e9


def peak_memory(run: Run) -> tuple[int, MemoryBreakdown | None]:
    """Maximum sampled memory over the full run (warmup included)."""
    return max(s.mem_used_bytes for s in run.samples), run.memory_breakdown


def throughput(run: Run, step_windows: Sequence[StepWindow]) -> float:
    """Training samples per second over the complete non-warmup steps."""
    non_warmup = [w for w in step_windows if not w.is_warmup]
    if not non_warmup:
        raise NoCompleteSteps("throughput needs at least one complete non-warmup step")
    total_us = sum(w.duration_us for w in non_warmup)
    return (run.meta.batch_size * len(non_warmup) * 1_000_000) / total_us


def power_dominance(run: Run, window: Window | None = None) -> tuple[RailShare, ...]:
    """Component rails (cpu, gpu, mem) ordered by time-weighted mean power.

    Each entry carries its share of the system rail's mean; the system rail
    itself is the denominator, not a contestant.
    """
    means = {
        rail: _weighted_mean(run, [getattr(s, attr) for s in run.samples], window)
        for rail, attr in _RAIL_ATTR.items()
    }
    sys_mean = means.pop("sys")
    ranked = sorted(means.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(
        RailShare(rail=r, mean_mw=m, share_of_sys=(m / sys_mean if sys_mean > 0 else 0.0))
        for r, m in ranked
    )


def _per_op_aggregates(run: Run, attributions) -> dict[str, OpAggregate]:
    counts: dict[str, int] = {}
    busy: dict[str, int] = {}
    attributed: dict[str, int] = {}
    for op in run.ops:
        counts[op.op_name] = counts.get(op.op_name, 0) + 1
        busy[op.op_name] = busy.get(op.op_name, 0) + op.duration_us
        attributed.setdefault(op.op_name, 0)
    for a in attributions:
        for oi in a.op_indices:
            name = run.ops[oi].op_name
            attributed[name] += 1
    return {
        name: OpAggregate(
            count=counts[name],
            busy_time_us=busy[name],
            attributed_samples=attributed[name],
            below_sampling_resolution=attributed[name] == 0,
        )
        for name in sorted(counts)
    }


def _step_metrics(run: Run, w: StepWindow, idle_threshold: float) -> StepMetrics | None:
    window = (w.start, w.end)
    try:
        per_core = tuple(
            cpu_core_utilization(run, c, window) for c in range(run.meta.core_count)
        )
    except NoSamplesInWindow:
        return None  # step shorter than the sampling resolution
    return StepMetrics(
        step_id=w.step_id,
        is_warmup=w.is_warmup,
        start=w.start,
        end=w.end,
        per_core_util=per_core,
        cpu_avg_util=fsum(per_core) / len(per_core),
        gpu_util=gpu_utilization(run, window),
        idle_ratio_per_core=tuple(
            idle_ratio(run, c, window, idle_threshold) for c in range(run.meta.core_count)
        ),
        energy_by_rail_joules={rail: energy(run, rail, window) for rail in RAILS},
        throughput_samples_per_sec=(run.meta.batch_size * 1_000_000) / w.duration_us,
    )


def build_report(
    run: Run,
    step_windows: Sequence[StepWindow] | None = None,
    *,
    signal: str = "gpu_util",
    idle_threshold: float = 0.0,
) -> MetricReport:
    """Assemble the full metric report for one run.

    Resolves step windows when not supplied, restricts run-level metrics to
    the non-warmup analysis window, computes per-step metrics by narrowing
    the window to each step, and aggregates per-op sample attributions.
    Component errors (NoSamplesInWindow, NoCompleteSteps, ...) propagate.
    """
    if step_windows is None:
        step_windows = steps_mod.resolve_steps(run, signal)
    step_windows = tuple(step_windows)
    window = nonwarmup_window(step_windows)

    per_core = tuple(cpu_core_utilization(run, c, window) for c in range(run.meta.core_count))
    attributions = attribute_samples(run, step_windows)

    has_labels = any(op.step_id is not None for op in run.ops)
    if has_labels:
        period = steps_mod.explicit_period(step_windows)
    else:
        period = steps_mod.detect_period(run, signal)

    predictability: PredictabilityScore | None
    try:
        predictability = steps_mod.predictability(run, step_windows, signal)
    except (NoCompleteSteps, SignalTooShort):
        predictability = None

    concurrent = concurrent_ops_exist(run)
    peak, breakdown = peak_memory(run)
    warmup = run.meta.warmup_steps
    notes = [
        f"utilization, idle-ratio and energy metrics exclude the first {warmup} warmup steps",
        "peak memory is taken over the full run, warmup included",
        f"ops with zero attributed samples are below the {run.meta.sample_interval_us} us "
        "sampling resolution",
    ]
    if concurrent:
        notes.append(
            "concurrent ops exist: per-op attributed-sample counts may double-count samples"
        )

    per_step = [_step_metrics(run, w, idle_threshold) for w in step_windows]
    return MetricReport(
        run_id=run.meta.run_id,
        batch_size=run.meta.batch_size,
        core_count=run.meta.core_count,
        sample_interval_us=run.meta.sample_interval_us,
        warmup_steps=warmup,
        per_core_util=per_core,
        cpu_avg_util=fsum(per_core) / len(per_core),
        gpu_util=gpu_utilization(run, window),
        idle_ratio_per_core=tuple(
            idle_ratio(run, c, window, idle_threshold) for c in range(run.meta.core_count)
        ),
        energy_by_rail_joules={rail: energy(run, rail, window) for rail in RAILS},
        peak_mem_bytes=peak,
        throughput_samples_per_sec=throughput(run, step_windows),
        steps=step_windows,
        per_step=tuple(m for m in per_step if m is not None),
        per_op=_per_op_aggregates(run, attributions),
        power_rail_ranking=power_dominance(run, window),
        period=period,
        predictability=predictability,
        memory_breakdown=breakdown,
        concurrent_ops_double_counting=concurrent,
        idle_threshold=idle_threshold,
        notes=tuple(notes),
    )
