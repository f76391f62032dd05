# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled whole-episode loops for the grid policies.

Arithmetic is written in the same order as ``_kernels_py`` so both backends
produce bit-identical trajectories.  Arms are reported as grid indices.
"""
from libc.math cimport log, sqrt


def escalation_episode(const double[::1] f_grid, const double[::1] noise,
                       double env_sigma, long K, long m, double sigma,
                       long[::1] arm_out, double[::1] reward_out):
    """Run the batch escalation rule for ``len(noise)`` periods.

    Returns ``(k, stop_period)``: the grid index held at the end and the
    1-based period whose batch triggered the freeze (0 if never frozen).
    """
    cdef Py_ssize_t T = noise.shape[0]
    cdef Py_ssize_t t
    cdef long k = 0, count = 0, i
    cdef long stop_period = 0
    cdef bint stopped = False
    cdef double batch_sum = 0.0, mean, half, lb, ub, r
    cdef double[::1] lbs
    if m < 1:
        raise ValueError("batch size m must be >= 1")
    import numpy as np
    lbs = np.zeros(K + 1, dtype=np.float64)
    half = sigma * sqrt(2.0 * log(<double>m) / m)

    for t in range(T):
        r = f_grid[k] + env_sigma * noise[t]
        arm_out[t] = k
        reward_out[t] = r
        if stopped:
            continue
        batch_sum += r
        count += 1
        if count < m:
            continue
        mean = batch_sum / m
        ub = mean + half
        lb = mean - half
        batch_sum = 0.0
        count = 0
        for i in range(k):
            if ub < lbs[i]:
                stopped = True
                break
        if stopped:
            stop_period = t + 1
        elif k == K:
            # grid exhausted without a stop: hold the last arm
            stopped = True
            stop_period = t + 1
        else:
            lbs[k] = lb
            k += 1
    return k, stop_period


def ucb_episode(const double[::1] f_grid, const double[::1] noise,
                double env_sigma, long K, double sigma,
                bint monotone, bint deflating,
                long[::1] arm_out, double[::1] reward_out):
    """Run discretized UCB on the ``K + 1`` grid arms for ``len(noise)`` periods."""
    cdef Py_ssize_t T = noise.shape[0]
    cdef Py_ssize_t t
    cdef long k, best, last = 0
    cdef double tt, lt, conf, idx, best_idx, r
    import numpy as np
    counts_arr = np.zeros(K + 1, dtype=np.int64)
    sums_arr = np.zeros(K + 1, dtype=np.float64)
    cdef long long[::1] counts = counts_arr
    cdef double[::1] sums = sums_arr

    for t in range(T):
        tt = <double>(t + 1)
        lt = log(tt)
        conf = log(1.0 + tt * (lt * lt))
        best = 0
        best_idx = 0.0
        for k in range(K + 1):
            if counts[k] == 0:
                if deflating:
                    idx = 1.0 - (<double>k) / K
                else:
                    idx = 1.0
            else:
                idx = sums[k] / counts[k] + sigma * sqrt(2.0 * conf / counts[k])
            if k == 0 or idx > best_idx:
                best = k
                best_idx = idx
        if monotone and best < last:
            best = last
        last = best
        r = f_grid[best] + env_sigma * noise[t]
        arm_out[t] = best
        reward_out[t] = r
        counts[best] += 1
        sums[best] += r
    return counts_arr, sums_arr
