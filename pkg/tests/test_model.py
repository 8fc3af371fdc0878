import pytest
from hypothesis import given, strategies as st

from conftest import mk_run, mk_sample, util_fractions
from traceprof.errors import TraceValidationError
from traceprof.ingest import (
    parse_op_trace,
    parse_telemetry,
    write_op_trace,
    write_telemetry,
)
from traceprof.model import Device, OpEvent, RunMeta, validate_run


def test_well_formed_run_is_sorted():
    samples = [mk_sample(t * 10_000) for t in reversed(range(10))]
    ops = [
        OpEvent("b", Device.CPU, 50, 150),
        OpEvent("a", Device.GPU, 0, 100),
    ]
    run = mk_run(samples, ops)
    assert [s.t for s in run.samples] == sorted(s.t for s in run.samples)
    assert [op.op_name for op in run.ops] == ["a", "b"]
    assert run.warnings == ()


def test_core_count_mismatch_reported():
    meta = RunMeta("r", batch_size=1, core_count=6)
    samples = [mk_sample(0, cores=(0.0,) * 5)]
    ops = [OpEvent("a", Device.GPU, 0, 100)]
    with pytest.raises(TraceValidationError) as exc:
        validate_run(meta, ops, samples)
    assert any(i.code == "CoreCountMismatch" for i in exc.value.issues)


def test_op_end_before_start_names_the_op():
    samples = [mk_sample(0)]
    ops = [OpEvent("MatMul", Device.GPU, 200, 100)]
    with pytest.raises(TraceValidationError) as exc:
        mk_run(samples, ops)
    bad = [i for i in exc.value.issues if i.code == "InvariantViolation"]
    assert bad and "MatMul" in bad[0].message


def test_validation_collects_every_violation():
    meta = RunMeta("r", batch_size=0, core_count=2)
    ops = [OpEvent("", Device.GPU, 100, 100), OpEvent("x", Device.CPU, -5, 10)]
    samples = [mk_sample(0, cores=(1.5, 0.0), p_gpu=-1.0)]
    with pytest.raises(TraceValidationError) as exc:
        validate_run(meta, ops, samples)
    codes = [i.code for i in exc.value.issues]
    # batch_size, empty name, end<=start, negative start, util range, power
    assert len([c for c in codes if c in ("InvalidMeta", "InvariantViolation")]) >= 5


def test_empty_trace_reported():
    meta = RunMeta("r", batch_size=1, core_count=1)
    with pytest.raises(TraceValidationError) as exc:
        validate_run(meta, [], [])
    assert any(i.code == "EmptyTrace" for i in exc.value.issues)


def test_duplicate_timestamps_warn_but_validate():
    samples = [mk_sample(0), mk_sample(0), mk_sample(10_000)]
    run = mk_run(samples)
    assert any(w.code == "ClockSkew" for w in run.warnings)


def test_validate_is_idempotent():
    samples = [mk_sample(t * 10_000, cores=(0.5, 0.0), gpu=0.25) for t in range(5)]
    ops = [OpEvent("a", Device.GPU, 0, 50_000, step_id=0)]
    run = mk_run(samples, ops)
    again = validate_run(run.meta, run.ops, run.samples, run.memory_breakdown)
    assert again == run


@st.composite
def runs(draw):
    core_count = draw(st.integers(1, 4))
    n = draw(st.integers(1, 12))
    interval = draw(st.sampled_from([1_000, 10_000]))
    samples = [
        mk_sample(
            i * interval,
            cores=tuple(draw(util_fractions) for _ in range(core_count)),
            gpu=draw(util_fractions),
            p_cpu=float(draw(st.integers(0, 15_000))),
            p_gpu=float(draw(st.integers(0, 15_000))),
            p_mem=float(draw(st.integers(0, 15_000))),
            p_sys=float(draw(st.integers(0, 15_000))),
            mem=draw(st.integers(0, 10**10)),
        )
        for i in range(n)
    ]
    n_ops = draw(st.integers(1, 6))
    ops = []
    for i in range(n_ops):
        start = draw(st.integers(0, n * interval))
        length = draw(st.integers(1, interval * 3))
        ops.append(
            OpEvent(
                op_name=draw(st.sampled_from(["conv", "matmul", "pool"])),
                device=draw(st.sampled_from([Device.CPU, Device.GPU])),
                start=start,
                end=start + length,
                layer=draw(st.sampled_from([None, "l1"])),
                step_id=draw(st.sampled_from([None, 0, 1])),
            )
        )
    meta = RunMeta(
        run_id="prop",
        batch_size=draw(st.integers(1, 64)),
        core_count=core_count,
        sample_interval_us=interval,
        warmup_steps=draw(st.integers(0, 3)),
    )
    return validate_run(meta, ops, samples)


@given(runs())
def test_serialize_parse_round_trip(run):
    op_bytes = write_op_trace(run.ops)
    telemetry_bytes = write_telemetry(run.samples, run.meta.core_count)
    ops, op_issues = parse_op_trace(op_bytes)
    samples, telemetry_issues = parse_telemetry(telemetry_bytes, run.meta.core_count)
    assert not [i for i in op_issues if i.severity == "error"]
    assert not [i for i in telemetry_issues if i.severity == "error"]
    again = validate_run(run.meta, ops, samples)
    assert again.ops == run.ops
    assert again.samples == run.samples


@given(runs())
def test_validate_idempotent_property(run):
    assert validate_run(run.meta, run.ops, run.samples) == run
