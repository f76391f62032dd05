"""Episode runner, monotonicity audit and regret.

Seeds are split into independent streams with :class:`numpy.random.SeedSequence`:
the environment noise of an episode with seed ``s`` comes from
``SeedSequence(s, spawn_key=(ENV_STREAM,))`` and the policy randomizer from
``SeedSequence(s, spawn_key=(POLICY_STREAM, crc32(policy.name)))``.  All
policies run with the same seed therefore see the same noise sequence, and
adding a policy never changes what another policy sees.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .env import NoiseModel, PiecewiseLinearFunction, evaluate, grid_values, max_value

ENV_STREAM = 0
POLICY_STREAM = 1
INSTANCE_STREAM = 2

__all__ = [
    "Trajectory",
    "RunRecord",
    "MonotonicityViolation",
    "run_episode",
    "regret",
    "assert_monotone",
    "stream",
    "env_rng",
    "policy_seed",
]


class MonotonicityViolation(RuntimeError):
    """A policy declared monotone played a smaller arm than before."""


def stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def env_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(stream(seed, ENV_STREAM))


def policy_seed(seed: int, policy_name: str) -> np.random.SeedSequence:
    return stream(seed, POLICY_STREAM, zlib.crc32(policy_name.encode()))


@dataclass(frozen=True, eq=False)
class Trajectory:
    arms: np.ndarray
    rewards: np.ndarray
    instance_id: str = ""
    policy_id: str = ""
    seed: int | None = None

    def __post_init__(self):
        arms = np.asarray(self.arms, dtype=np.float64)
        rewards = np.asarray(self.rewards, dtype=np.float64)
        if arms.shape != rewards.shape or arms.ndim != 1:
            raise ValueError("arms and rewards must be 1-d sequences of equal length")
        if arms.size and (arms.min() < 0.0 or arms.max() > 1.0):
            raise ValueError("arm coordinates must lie in [0, 1]")
        arms.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "rewards", rewards)

    @property
    def T(self) -> int:
        return len(self.arms)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (np.array_equal(self.arms, other.arms)
                and np.array_equal(self.rewards, other.rewards)
                and (self.instance_id, self.policy_id, self.seed)
                == (other.instance_id, other.policy_id, other.seed))


@dataclass(frozen=True)
class RunRecord:
    trajectory: Trajectory
    regret: float
    monotone: bool
    extra: dict = field(default_factory=dict, compare=False)

    def log_entry(self) -> dict:
        tr = self.trajectory
        entry = {"policy": tr.policy_id, "instance": tr.instance_id, "T": tr.T,
                 "seed": tr.seed, "regret": self.regret, "monotone": self.monotone}
        entry.update(self.extra)
        return entry

    def to_log_line(self) -> str:
        return json.dumps(self.log_entry(), sort_keys=True)


def parse_log_line(line: str) -> dict:
    entry = json.loads(line)
    missing = {"policy", "instance", "T", "seed", "regret", "monotone"} - entry.keys()
    if missing:
        raise ValueError(f"log record missing fields {sorted(missing)}")
    return entry


def assert_monotone(trajectory: Trajectory) -> bool:
    """True iff the arm sequence is nondecreasing."""
    arms = trajectory.arms if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
    return bool(np.all(arms[1:] >= arms[:-1]))


def regret(trajectory: Trajectory, f: PiecewiseLinearFunction) -> float:
    """``T * max f - sum_t f(X_t)`` against the noiseless function."""
    arms = trajectory.arms
    if arms.size == 0:
        raise ValueError("empty trajectory")
    _, best = max_value(f)
    uniq, counts = np.unique(arms, return_counts=True)
    gaps = [max(best - evaluate(f, float(x)), 0.0) for x in uniq]
    return math.fsum(g * int(n) for g, n in zip(gaps, counts))


def run_episode(policy, f: PiecewiseLinearFunction, noise: NoiseModel, T: int, seed: int,
                *, policy_sigma: float | None = None, fast: bool = True,
                backend: str | None = None, instance_id: str | None = None,
                on_period=None) -> RunRecord:
    """Play ``policy`` against ``f`` for ``T`` periods.

    ``policy_sigma`` is the noise scale handed to the policy (defaults to the
    true ``noise.sigma``).  With ``fast`` the policy's whole-episode kernel is
    used when it has one; ``on_period(t, arm, reward)`` forces the step path.
    Raises :class:`MonotonicityViolation` if a monotone policy steps down.
    """
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    sigma_for_policy = noise.sigma if policy_sigma is None else policy_sigma
    policy.reset(T, sigma_for_policy, policy_seed(seed, policy.name))
    g = env_rng(seed).standard_normal(T)

    if fast and on_period is None and policy.supports_kernel:
        arm_idx, rewards, K = policy.run_kernel(
            lambda K: grid_values(f, K), g, noise.sigma, backend=backend)
        arms = arm_idx / K
    else:
        arms = np.empty(T, dtype=np.float64)
        rewards = np.empty(T, dtype=np.float64)
        cache = {}
        prev = -math.inf
        for t in range(1, T + 1):
            arm = policy.next_arm(t)
            if policy.monotone and arm < prev:
                raise MonotonicityViolation(
                    f"{policy.name} played {arm!r} after {prev!r} at t={t}")
            value = cache.get(arm)
            if value is None:
                value = cache[arm] = evaluate(f, arm)
            reward = value + noise.sigma * g[t - 1]
            policy.observe(t, arm, reward)
            arms[t - 1] = arm
            rewards[t - 1] = reward
            prev = arm
            if on_period is not None:
                on_period(t, arm, reward)

    traj = Trajectory(arms, rewards, instance_id=instance_id or f.name,
                      policy_id=policy.name, seed=seed)
    mono = assert_monotone(traj)
    if policy.monotone and not mono:
        raise MonotonicityViolation(f"{policy.name} produced a decreasing arm sequence")
    return RunRecord(traj, regret(traj, f), mono)
