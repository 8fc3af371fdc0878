import hypothesis.strategies as st
from hypothesis import settings

from traceprof.model import Device, OpEvent, RunMeta, TelemetrySample, validate_run

settings.register_profile("suite", deadline=None, derandomize=True)
settings.load_profile("suite")


def mk_sample(t, cores=(0.0, 0.0), gpu=0.0, p_cpu=0.0, p_gpu=0.0, p_mem=0.0, p_sys=0.0, mem=0):
    return TelemetrySample(
        t=t,
        cpu_core_util=tuple(cores),
        gpu_util=gpu,
        power_cpu_mw=p_cpu,
        power_gpu_mw=p_gpu,
        power_mem_mw=p_mem,
        power_sys_mw=p_sys,
        mem_used_bytes=mem,
    )


def mk_run(samples, ops=None, *, batch=1, interval=10_000, warmup=0,
           capacity=8_000_000_000, breakdown=None, run_id="test"):
    core_count = len(samples[0].cpu_core_util)
    if ops is None:
        ops = [OpEvent("op", Device.GPU, samples[0].t, samples[-1].t + interval)]
    meta = RunMeta(
        run_id=run_id,
        batch_size=batch,
        core_count=core_count,
        device_mem_capacity_bytes=capacity,
        sample_interval_us=interval,
        warmup_steps=warmup,
    )
    return validate_run(meta, ops, samples, breakdown)


# Utilization fractions on the 1/1024 grid survive the percent wire format
# bit-exactly; see the synth module notes.
util_fractions = st.integers(0, 1024).map(lambda k: k / 1024.0)
powers_mw = st.floats(0.0, 15_000.0, allow_nan=False, allow_infinity=False)
