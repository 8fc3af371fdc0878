"""Independent reference implementations used to check the pipeline.

Everything here is deliberately naive: plain loops, brute-force pair
enumeration and a discretized timeline. None of it shares code with the
implementations under test.
"""

import numpy as np


def weighted_mean_oracle(values, weights):
    num = 0.0
    den = 0.0
    for v, w in zip(values, weights):
        num += v * w
        den += w
    return num / den


def rectangle_energy_oracle(powers_mw, dts_us):
    total_nj = 0.0
    for p, dt in zip(powers_mw, dts_us):
        total_nj += p * dt
    return total_nj / 1e9


def brute_force_attribution(ops, samples):
    """All (sample, op) pairs with op.start <= sample.t < op.end, by double loop."""
    starts = np.array([op.start for op in ops])
    ends = np.array([op.end for op in ops])
    ts = np.array([s.t for s in samples])
    # Broadcasting evaluates every (sample, op) pair.
    inside = (starts[None, :] <= ts[:, None]) & (ts[:, None] < ends[None, :])
    return [tuple(np.flatnonzero(row)) for row in inside]


def discretized_busy_oracle(intervals, resolution_us=1):
    """Union length of intervals by marking a boolean timeline."""
    if not intervals:
        return 0
    lo = min(start for start, _ in intervals)
    hi = max(end for _, end in intervals)
    timeline = np.zeros((hi - lo) // resolution_us, dtype=bool)
    for start, end in intervals:
        timeline[(start - lo) // resolution_us : (end - lo) // resolution_us] = True
    return int(timeline.sum()) * resolution_us


def count_ratio_oracle(values, predicate):
    hits = sum(1 for v in values if predicate(v))
    return hits / len(values)


def pairwise_pearson_oracle(series):
    """Mean Pearson correlation over unordered pairs, via numpy directly."""
    rs = []
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            a, b = np.asarray(series[i]), np.asarray(series[j])
            rs.append(float(np.corrcoef(a, b)[0, 1]))
    return sum(rs) / len(rs)
