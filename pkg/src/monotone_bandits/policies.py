"""Policies for the monotone continuum-armed bandit.

Every policy follows the same lifecycle: ``reset(T, sigma, seed)`` once per
episode, then for t = 1..T ``next_arm(t)`` followed by
``observe(t, arm, reward)``.  Grid policies additionally expose
``run_kernel`` which plays a whole episode in one call to the compiled (or
pure-Python) kernel; the harness uses it when available and both routes
yield identical trajectories.
"""
from __future__ import annotations

import math
from math import isqrt

import numpy as np

from . import kernels

__all__ = [
    "Policy",
    "EscalationPolicy",
    "UcbPolicy",
    "ConstantPolicy",
    "escalation_params",
    "confidence_bounds",
    "ucb_grid_size",
    "make_policy",
    "POLICY_NAMES",
    "ConfigurationError",
]


class ConfigurationError(ValueError):
    """A policy or experiment was configured outside its valid regime."""


def escalation_params(T: int) -> tuple[int, int]:
    """Grid size ``floor(T^(1/4))`` and batch size ``floor(T^(1/2))``."""
    if T < 16:
        raise ConfigurationError(f"escalation schedule needs T >= 16, got T={T}")
    m = isqrt(T)
    return isqrt(m), m


def ucb_grid_size(T: int) -> int:
    """``floor(T^(1/3))`` in exact integer arithmetic."""
    if T < 1:
        raise ConfigurationError("horizon must be >= 1")
    K = int(round(T ** (1.0 / 3.0)))
    while K ** 3 > T:
        K -= 1
    while (K + 1) ** 3 <= T:
        K += 1
    return K


def confidence_bounds(batch_mean: float, m: int, sigma: float) -> tuple[float, float]:
    """``(LB, UB)`` = mean -/+ sigma * sqrt(2 ln m / m)."""
    if m < 1:
        raise ValueError("batch size m must be >= 1")
    half = sigma * math.sqrt(2.0 * math.log(float(m)) / m)
    return batch_mean - half, batch_mean + half


class Policy:
    """Base class.  Subclasses set ``name`` and ``monotone``."""

    name = "policy"
    monotone = False

    def __init__(self, sigma: float | None = None):
        self.fixed_sigma = sigma
        self.T = None
        self.sigma = sigma
        self.rng = None

    def reset(self, T: int, sigma: float, seed=None):
        self.T = T
        self.sigma = sigma if self.fixed_sigma is None else self.fixed_sigma
        self.rng = np.random.default_rng(seed)

    def next_arm(self, t: int) -> float:
        raise NotImplementedError

    def observe(self, t: int, arm: float, reward: float):
        raise NotImplementedError

    supports_kernel = False

    def run_kernel(self, f_grid_for, noise, env_sigma, backend=None):
        """Play a full episode; returns ``(arm_index, rewards, K)``."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r})"


class EscalationPolicy(Policy):
    """Batch escalation over the grid {0, 1/K, ..., 1}.

    Arm k/K is pulled m times.  When the batch completes, its confidence
    interval is compared with the lower bounds of all earlier arms; if the
    upper bound is strictly below any of them the policy freezes at k/K,
    otherwise it moves up to (k+1)/K.  After the batch at arm 1 the policy
    freezes there.

    ``K`` and ``m`` default to ``escalation_params(T)``.
    """

    name = "alg1"
    monotone = True
    supports_kernel = True

    def __init__(self, K: int | None = None, m: int | None = None, sigma: float | None = None):
        super().__init__(sigma)
        if K is not None and K < 1:
            raise ConfigurationError("K must be >= 1")
        if m is not None and m < 1:
            raise ConfigurationError("m must be >= 1")
        self.K_override = K
        self.m_override = m

    def schedule(self, T: int) -> tuple[int, int]:
        if self.K_override is not None and self.m_override is not None:
            return self.K_override, self.m_override
        K, m = escalation_params(T)
        return (self.K_override or K), (self.m_override or m)

    def reset(self, T, sigma, seed=None):
        super().reset(T, sigma, seed)
        self.K, self.m = self.schedule(T)
        self.k = 0
        self.batch_sum = 0.0
        self.batch_count = 0
        self.lb_history: list[float] = []
        self.stopped = False
        self.exhausted = False
        self.frozen_arm = None
        self.events: list[dict] = []

    @property
    def current_arm(self) -> float:
        return self.k / self.K

    def next_arm(self, t):
        if self.stopped:
            return self.frozen_arm
        return self.current_arm

    def observe(self, t, arm, reward):
        if self.stopped:
            return
        self.batch_sum += reward
        self.batch_count += 1
        if self.batch_count < self.m:
            return
        self.complete_batch(t)

    def complete_batch(self, t):
        mean = self.batch_sum / self.m
        lb, ub = confidence_bounds(mean, self.m, self.sigma)
        self.batch_sum = 0.0
        self.batch_count = 0
        fired = any(ub < prev for prev in self.lb_history)
        event = {"t": t, "k": self.k, "arm": self.current_arm, "mean": mean,
                 "lb": lb, "ub": ub, "stop": fired, "exhausted": False}
        if fired:
            self.stopped = True
            self.frozen_arm = self.current_arm
        elif self.k == self.K:
            self.stopped = True
            self.exhausted = True
            self.frozen_arm = self.current_arm
            event["exhausted"] = True
        else:
            self.lb_history.append(lb)
            self.k += 1
        self.events.append(event)

    def run_kernel(self, f_grid_for, noise, env_sigma, backend=None):
        impl = kernels.get_backend(backend)
        f_grid = f_grid_for(self.K)
        T = len(noise)
        arm_idx = np.empty(T, dtype=np.int64)
        rewards = np.empty(T, dtype=np.float64)
        k, stop_period = impl.escalation_episode(
            f_grid, noise, float(env_sigma), self.K, self.m, float(self.sigma), arm_idx, rewards)
        self.k = k
        self.stopped = stop_period > 0
        self.frozen_arm = k / self.K if self.stopped else None
        return arm_idx, rewards, self.K


class UcbPolicy(Policy):
    """Discretized UCB on {k/K : k = 0..K} with ``K = floor(T^(1/3))``.

    Variants: ``plain`` (unconstrained), ``monotone`` (never moves below the
    previous arm) and ``deflating`` (monotone, untried arm k starts with
    index 1 - k/K instead of 1).  Argmax ties go to the smallest index.
    """

    supports_kernel = True
    _names = {"plain": "ucb", "monotone": "ucb-mono", "deflating": "ucb-deflate"}

    def __init__(self, variant: str = "plain", K: int | None = None, sigma: float | None = None):
        super().__init__(sigma)
        if variant not in self._names:
            raise ConfigurationError(f"unknown UCB variant {variant!r}")
        if K is not None and K < 1:
            raise ConfigurationError("K must be >= 1")
        self.variant = variant
        self.name = self._names[variant]
        self.monotone = variant != "plain"
        self.deflating = variant == "deflating"
        self.K_override = K

    def reset(self, T, sigma, seed=None):
        super().reset(T, sigma, seed)
        self.K = self.K_override or ucb_grid_size(T)
        self.counts = [0] * (self.K + 1)
        self.sums = [0.0] * (self.K + 1)
        self.last_index = 0

    def empirical_mean(self, k: int) -> float:
        return self.sums[k] / self.counts[k]

    def ucb_index(self, k: int, t: int) -> float:
        n = self.counts[k]
        if n == 0:
            return 1.0 - float(k) / self.K if self.deflating else 1.0
        tt = float(t)
        lt = math.log(tt)
        conf2 = 2.0 * math.log(1.0 + tt * (lt * lt))
        return self.sums[k] / n + self.sigma * math.sqrt(conf2 / n)

    def select_index(self, t: int) -> int:
        best, best_idx = 0, self.ucb_index(0, t)
        for k in range(1, self.K + 1):
            idx = self.ucb_index(k, t)
            if idx > best_idx:
                best, best_idx = k, idx
        if self.monotone and best < self.last_index:
            best = self.last_index
        return best

    def next_arm(self, t):
        return self.select_index(t) / self.K

    def observe(self, t, arm, reward):
        k = int(round(arm * self.K))
        self.counts[k] += 1
        self.sums[k] += reward
        self.last_index = k

    def run_kernel(self, f_grid_for, noise, env_sigma, backend=None):
        impl = kernels.get_backend(backend)
        f_grid = f_grid_for(self.K)
        T = len(noise)
        arm_idx = np.empty(T, dtype=np.int64)
        rewards = np.empty(T, dtype=np.float64)
        counts, sums = impl.ucb_episode(
            f_grid, noise, float(env_sigma), self.K, float(self.sigma),
            self.monotone, self.deflating, arm_idx, rewards)
        self.counts = counts.tolist()
        self.sums = sums.tolist()
        self.last_index = int(arm_idx[-1]) if T else 0
        return arm_idx, rewards, self.K


class ConstantPolicy(Policy):
    """Plays one fixed arm every period (reference and test policy)."""

    monotone = True

    def __init__(self, arm: float, name: str | None = None):
        super().__init__()
        if not 0.0 <= arm <= 1.0:
            raise ConfigurationError("arm must lie in [0, 1]")
        self.arm = float(arm)
        self.name = name or f"constant:{arm!r}"

    def next_arm(self, t):
        return self.arm

    def observe(self, t, arm, reward):
        pass


POLICY_NAMES = ("alg1", "ucb", "ucb-mono", "ucb-deflate")


def make_policy(name: str, instance=None, K: int | None = None, m: int | None = None,
                sigma: float | None = None) -> Policy:
    """Build a policy from its roster name.

    ``oracle`` plays the maximizer of ``instance``; ``constant:<x>`` plays x.
    """
    if name == "alg1":
        return EscalationPolicy(K=K, m=m, sigma=sigma)
    if name in ("ucb", "ucb-mono", "ucb-deflate"):
        if m is not None:
            raise ConfigurationError(f"{name} has no batch size m")
        variant = {"ucb": "plain", "ucb-mono": "monotone", "ucb-deflate": "deflating"}[name]
        return UcbPolicy(variant, K=K, sigma=sigma)
    if name == "oracle":
        if instance is None:
            raise ConfigurationError("oracle policy needs the instance")
        from .env import max_value
        return ConstantPolicy(max_value(instance)[0], name="oracle")
    if name.startswith("constant:"):
        try:
            arm = float(name.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad constant policy {name!r}") from None
        return ConstantPolicy(arm, name=name)
    raise ConfigurationError(f"unknown policy {name!r}")
