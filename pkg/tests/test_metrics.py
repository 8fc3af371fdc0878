import random
from math import fsum

import pytest

from conftest import mk_run, mk_sample
from oracles import rectangle_energy_oracle, weighted_mean_oracle
from traceprof.errors import NoCompleteSteps, NoSamplesInWindow, TraceProfError
from traceprof.metrics import (
    build_report,
    cpu_avg_utilization,
    cpu_core_utilization,
    energy,
    gpu_utilization,
    idle_ratio,
    nonwarmup_window,
    peak_memory,
    power_dominance,
    sample_weights_us,
    throughput,
)
from traceprof.model import Device, OpEvent, StepWindow


def _uniform_run(core_rows, gpu_row=None, powers=None, interval=10_000, mems=None, **kw):
    n = len(core_rows)
    gpu_row = gpu_row or [0.0] * n
    powers = powers or [(0.0, 0.0, 0.0, 0.0)] * n
    mems = mems or [0] * n
    samples = [
        mk_sample(i * interval, cores=core_rows[i], gpu=gpu_row[i],
                  p_cpu=powers[i][0], p_gpu=powers[i][1], p_mem=powers[i][2],
                  p_sys=powers[i][3], mem=mems[i])
        for i in range(n)
    ]
    return mk_run(samples, interval=interval, **kw)


def _jittered_run(seed, n=60):
    rng = random.Random(seed)
    t = 0
    samples = []
    for _ in range(n):
        samples.append(
            mk_sample(
                t,
                cores=(rng.random(), rng.random()),
                gpu=rng.random(),
                p_cpu=rng.uniform(0, 2_000),
                p_gpu=rng.uniform(0, 9_000),
                p_mem=rng.uniform(0, 4_000),
                p_sys=rng.uniform(0, 15_000),
                mem=rng.randrange(10**9),
            )
        )
        t += rng.randrange(8_000, 13_000)
    return mk_run(samples)


# --- Eq. 1: individual core utilization -------------------------------------

def test_saturated_core_is_one():
    run = _uniform_run([(1.0,)] * 10)
    assert cpu_core_utilization(run, 0) == 1.0


def test_binary_stream_active_30_of_100():
    rows = [(1.0,) if i < 30 else (0.0,) for i in range(100)]
    run = _uniform_run(rows)
    assert cpu_core_utilization(run, 0) == 0.30


def test_core_utilization_matches_direct_sum_oracle():
    run = _jittered_run(seed=1)
    dts = sample_weights_us(run)
    for core in (0, 1):
        values = [s.cpu_core_util[core] for s in run.samples]
        expected = weighted_mean_oracle(values, dts)
        assert cpu_core_utilization(run, core) == pytest.approx(expected, rel=1e-12)


# --- Eq. 2: average over cores ----------------------------------------------

def test_avg_utilization_six_cores():
    run = _uniform_run([(0.6, 0.6, 0.0, 0.0, 0.0, 0.0)] * 4)
    assert cpu_avg_utilization(run) == pytest.approx(0.2, abs=1e-15)


def test_avg_utilization_all_zero():
    run = _uniform_run([(0.0, 0.0)] * 4)
    assert cpu_avg_utilization(run) == 0.0


def test_avg_equals_mean_of_per_core_exactly():
    run = _jittered_run(seed=2)
    per_core = [cpu_core_utilization(run, c) for c in range(2)]
    assert cpu_avg_utilization(run) == fsum(per_core) / len(per_core)


# --- Eq. 3: GPU utilization ---------------------------------------------------

def test_gpu_constant_denselike_batch64():
    run = _uniform_run([(0.0,)] * 50, gpu_row=[0.964] * 50)
    assert gpu_utilization(run) == 0.964


def test_gpu_all_zero():
    run = _uniform_run([(0.0,)] * 10)
    assert gpu_utilization(run) == 0.0


def test_gpu_matches_direct_sum_oracle():
    run = _jittered_run(seed=3)
    dts = sample_weights_us(run)
    expected = weighted_mean_oracle([s.gpu_util for s in run.samples], dts)
    assert gpu_utilization(run) == pytest.approx(expected, rel=1e-12)


# --- idle-state ratio ---------------------------------------------------------

def test_idle_ratio_denver2_extreme():
    rows = [(0.0,) if i < 65 else (0.5,) for i in range(100)]
    run = _uniform_run(rows)
    assert idle_ratio(run, 0) == 0.65


def test_idle_ratio_never_zero_utilization():
    run = _uniform_run([(0.25,)] * 20)
    assert idle_ratio(run, 0) == 0.0


def test_idle_ratio_counts_exact_zeros_only():
    run = _uniform_run([(0.0,), (1e-9,), (0.0,), (0.5,)])
    assert idle_ratio(run, 0) == 0.5
    assert idle_ratio(run, 0, threshold=1e-6) == 0.75


def test_idle_ratio_matches_count_oracle_on_binary_stream():
    rng = random.Random(7)
    rows = [((0.0 if rng.random() < 0.4 else 1.0),) for _ in range(200)]
    run = _uniform_run(rows)
    zeros = sum(1 for (u,) in rows if u == 0.0)
    assert idle_ratio(run, 0) == pytest.approx(zeros / 200, abs=1e-15)


def test_idle_plus_active_is_one_for_binary_streams():
    rng = random.Random(9)
    rows = [((0.0 if rng.random() < 0.3 else 1.0),) for _ in range(150)]
    run = _uniform_run(rows)
    active = cpu_core_utilization(run, 0)
    assert abs(idle_ratio(run, 0) + active - 1.0) < 1e-12


# --- Eq. 4: energy -------------------------------------------------------------

def test_energy_single_sample():
    run = _uniform_run([(0.0,)], powers=[(0.0, 0.0, 0.0, 2_000.0)])
    assert energy(run, "sys") == 0.02


def test_energy_constant_low_power_mode_one_second():
    for interval in (5_000, 10_000, 20_000):
        n = 1_000_000 // interval
        run = _uniform_run(
            [(0.0,)] * n,
            powers=[(0.0, 0.0, 0.0, 7_500.0)] * n,
            interval=interval,
        )
        assert energy(run, "sys") == 7.5


def test_energy_matches_rectangle_oracle():
    run = _jittered_run(seed=4)
    dts = sample_weights_us(run)
    for rail, attr in (("cpu", "power_cpu_mw"), ("gpu", "power_gpu_mw"),
                       ("mem", "power_mem_mw"), ("sys", "power_sys_mw")):
        expected = rectangle_energy_oracle([getattr(s, attr) for s in run.samples], dts)
        assert energy(run, rail) == pytest.approx(expected, abs=1e-9)


def test_energy_additive_at_sample_boundaries():
    run = _jittered_run(seed=5)
    ts = [s.t for s in run.samples]
    a, b, c = ts[0], ts[len(ts) // 2], ts[-1] + run.meta.sample_interval_us
    total = energy(run, "sys", (a, c))
    split = energy(run, "sys", (a, b)) + energy(run, "sys", (b, c))
    assert split == pytest.approx(total, abs=1e-9)


def test_energy_scales_exactly_with_power():
    run = _jittered_run(seed=6)
    doubled = mk_run(
        [
            mk_sample(s.t, cores=s.cpu_core_util, gpu=s.gpu_util,
                      p_cpu=2 * s.power_cpu_mw, p_gpu=2 * s.power_gpu_mw,
                      p_mem=2 * s.power_mem_mw, p_sys=2 * s.power_sys_mw,
                      mem=s.mem_used_bytes)
            for s in run.samples
        ]
    )
    for rail in ("cpu", "gpu", "mem", "sys"):
        assert energy(doubled, rail) == 2 * energy(run, rail)


# --- peak memory ----------------------------------------------------------------

def test_peak_memory_is_max():
    gb = 1_000_000_000
    run = _uniform_run([(0.0,)] * 3, mems=[1 * gb, 5 * gb, 3 * gb])
    peak, _ = peak_memory(run)
    assert peak == 5 * gb


def test_peak_memory_monotone_series_is_last():
    run = _uniform_run([(0.0,)] * 5, mems=[1, 2, 3, 4, 5])
    assert peak_memory(run)[0] == 5


def test_peak_memory_includes_warmup_window():
    # Peak lands in the warmup step; the metric must still see it.
    rows = [(0.0,)] * 8
    mems = [9, 9, 1, 1, 1, 1, 1, 1]
    ops = [OpEvent("op", Device.GPU, s * 40_000, (s + 1) * 40_000, step_id=s) for s in range(2)]
    run = _uniform_run(rows, mems=mems, ops=ops, warmup=1)
    assert peak_memory(run)[0] == 9


def test_peak_memory_matches_running_max_oracle():
    run = _jittered_run(seed=8)
    peak, _ = peak_memory(run)
    running = 0
    for s in run.samples:
        if s.mem_used_bytes > running:
            running = s.mem_used_bytes
    assert peak == running
    assert all(peak >= s.mem_used_bytes for s in run.samples)


# --- throughput -------------------------------------------------------------------

def _stepped_run(n_steps, step_us, batch, warmup=0, interval=10_000):
    total = n_steps * step_us
    rows = [(0.0,)] * (total // interval)
    ops = [OpEvent("op", Device.GPU, s * step_us, (s + 1) * step_us, step_id=s)
           for s in range(n_steps)]
    return _uniform_run(rows, ops=ops, batch=batch, warmup=warmup, interval=interval)


def test_throughput_worked_example():
    # Five steps per second at batch size 4.
    run = _stepped_run(n_steps=5, step_us=200_000, batch=4)
    windows = [StepWindow(s, s * 200_000, (s + 1) * 200_000) for s in range(5)]
    assert throughput(run, windows) == 20.0


def test_throughput_one_second_step_batch_one():
    run = _stepped_run(n_steps=1, step_us=1_000_000, batch=1)
    windows = [StepWindow(0, 0, 1_000_000)]
    assert throughput(run, windows) == 1.0


def test_throughput_matches_raw_window_oracle():
    rng = random.Random(11)
    durations = [rng.randrange(50_000, 400_000) for _ in range(6)]
    start = 0
    windows = []
    for i, d in enumerate(durations):
        windows.append(StepWindow(i, start, start + d, is_warmup=i < 2))
        start += d
    run = _stepped_run(n_steps=3, step_us=100_000, batch=16)
    non_warmup = [w for w in windows if not w.is_warmup]
    expected = 16 * len(non_warmup) / (sum(w.duration_us for w in non_warmup) / 1e6)
    assert throughput(run, windows) == pytest.approx(expected, rel=1e-12)


def test_throughput_requires_non_warmup_steps():
    run = _stepped_run(n_steps=2, step_us=100_000, batch=4, warmup=2)
    windows = [StepWindow(s, s * 100_000, (s + 1) * 100_000, is_warmup=True) for s in range(2)]
    with pytest.raises(NoCompleteSteps):
        throughput(run, windows)


def test_throughput_invariant_under_time_translation():
    run = _stepped_run(n_steps=4, step_us=150_000, batch=8)
    shift = 123_456_789
    shifted = mk_run(
        [mk_sample(s.t + shift) for s in run.samples],
        [OpEvent(o.op_name, o.device, o.start + shift, o.end + shift, o.layer, o.step_id)
         for o in run.ops],
        batch=8,
    )
    w = [StepWindow(s, s * 150_000, (s + 1) * 150_000) for s in range(4)]
    w_shift = [StepWindow(x.step_id, x.start + shift, x.end + shift) for x in w]
    assert throughput(run, w) == throughput(shifted, w_shift)


# --- power dominance -----------------------------------------------------------

def test_power_dominance_constant_ordering():
    run = _uniform_run([(0.0,)] * 5, powers=[(1_000.0, 4_000.0, 2_000.0, 7_000.0)] * 5)
    ranking = power_dominance(run)
    assert [r.rail for r in ranking] == ["gpu", "mem", "cpu"]
    assert ranking[0].share_of_sys == pytest.approx(4_000 / 7_000, rel=1e-12)


def test_power_dominance_memory_first_lstm_signature():
    run = _uniform_run([(0.0,)] * 5, powers=[(1_000.0, 2_000.0, 3_000.0, 7_000.0)] * 5)
    assert power_dominance(run)[0].rail == "mem"


def test_power_dominance_matches_weighted_mean_oracle():
    run = _jittered_run(seed=12)
    dts = sample_weights_us(run)
    means = {
        rail: weighted_mean_oracle([getattr(s, attr) for s in run.samples], dts)
        for rail, attr in (("cpu", "power_cpu_mw"), ("gpu", "power_gpu_mw"),
                           ("mem", "power_mem_mw"))
    }
    expected = sorted(means, key=lambda r: -means[r])
    assert [r.rail for r in power_dominance(run)] == expected


# --- report assembly -------------------------------------------------------------

def test_two_identical_runs_give_identical_reports():
    a = _stepped_run(n_steps=4, step_us=100_000, batch=4, warmup=1)
    b = _stepped_run(n_steps=4, step_us=100_000, batch=4, warmup=1)
    assert build_report(a) == build_report(b)


def test_warmup_only_run_rejected():
    run = _stepped_run(n_steps=3, step_us=100_000, batch=4, warmup=3)
    windows = [StepWindow(s, s * 100_000, (s + 1) * 100_000, is_warmup=True) for s in range(3)]
    with pytest.raises(NoSamplesInWindow):
        nonwarmup_window(windows)
    with pytest.raises(TraceProfError):
        build_report(run)


def test_report_cpu_avg_consistent_with_per_core():
    report = build_report(_stepped_run(n_steps=4, step_us=100_000, batch=4, warmup=1))
    assert report.cpu_avg_util == fsum(report.per_core_util) / len(report.per_core_util)


def test_report_marks_sub_resolution_ops():
    # 1 us op can never catch a 10 ms sample.
    rows = [(0.0,)] * 10
    ops = [
        OpEvent("big", Device.GPU, 0, 100_000, step_id=0),
        OpEvent("tiny", Device.CPU, 55_001, 55_002, step_id=0),
    ]
    run = _uniform_run(rows, ops=ops, warmup=0)
    report = build_report(run)
    assert report.per_op["tiny"].below_sampling_resolution
    assert not report.per_op["big"].below_sampling_resolution
    assert report.concurrent_ops_double_counting
