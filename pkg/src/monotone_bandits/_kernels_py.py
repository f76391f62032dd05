"""Pure-Python twin of the compiled ``_kernels`` extension.

Same signatures, same operation order, same results bit for bit.  Used
when the extension is not built or ``MONOTONE_BANDITS_PURE=1`` is set.
"""
from math import log, sqrt

import numpy as np


def escalation_episode(f_grid, noise, env_sigma, K, m, sigma, arm_out, reward_out):
    if m < 1:
        raise ValueError("batch size m must be >= 1")
    f_grid = [float(v) for v in f_grid]
    noise = np.asarray(noise, dtype=np.float64).tolist()
    arms = [0] * len(noise)
    rewards = [0.0] * len(noise)
    lbs = []
    k = 0
    count = 0
    batch_sum = 0.0
    stopped = False
    stop_period = 0
    half = sigma * sqrt(2.0 * log(float(m)) / m)

    for t, g in enumerate(noise):
        r = f_grid[k] + env_sigma * g
        arms[t] = k
        rewards[t] = r
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
        for prev in lbs:
            if ub < prev:
                stopped = True
                break
        if stopped:
            stop_period = t + 1
        elif k == K:
            stopped = True
            stop_period = t + 1
        else:
            lbs.append(lb)
            k += 1
    arm_out[:] = arms
    reward_out[:] = rewards
    return k, stop_period


def ucb_episode(f_grid, noise, env_sigma, K, sigma, monotone, deflating, arm_out, reward_out):
    f_grid = [float(v) for v in f_grid]
    noise = np.asarray(noise, dtype=np.float64).tolist()
    arms = [0] * len(noise)
    rewards = [0.0] * len(noise)
    counts = [0] * (K + 1)
    sums = [0.0] * (K + 1)
    if deflating:
        untried = [1.0 - float(k) / K for k in range(K + 1)]
    else:
        untried = [1.0] * (K + 1)
    last = 0

    for t, g in enumerate(noise):
        tt = float(t + 1)
        lt = log(tt)
        conf2 = 2.0 * log(1.0 + tt * (lt * lt))
        best = 0
        best_idx = 0.0
        for k in range(K + 1):
            n = counts[k]
            if n == 0:
                idx = untried[k]
            else:
                idx = sums[k] / n + sigma * sqrt(conf2 / n)
            if k == 0 or idx > best_idx:
                best = k
                best_idx = idx
        if monotone and best < last:
            best = last
        last = best
        r = f_grid[best] + env_sigma * g
        arms[t] = best
        rewards[t] = r
        counts[best] += 1
        sums[best] += r
    arm_out[:] = arms
    reward_out[:] = rewards
    return np.array(counts, dtype=np.int64), np.array(sums, dtype=np.float64)
