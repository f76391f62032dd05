"""Objective-function instances, reward noise and assumption validators.

Every instance is a piecewise-linear function on [0, 1] with values in
[0, 1].  Functions are immutable and can be shared between concurrently
running episodes; randomness always comes from an explicit ``rng``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "PiecewiseLinearFunction",
    "NoiseModel",
    "InstanceSpec",
    "evaluate",
    "make_random_peak_instance",
    "make_lower_bound_instance",
    "make_prop1_pair",
    "make_explicit_instance",
    "sample_reward",
    "check_lipschitz",
    "check_quasiconcave",
    "max_value",
    "parse_instance",
    "grid_values",
    "lipschitz_constant",
]


@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Linear interpolation through ordered breakpoints ``(x, y)``.

    The x coordinates must be strictly increasing from 0 to 1 and every y
    must lie in [0, 1].
    """

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    name: str = field(default="explicit", compare=False)

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) != len(ys):
            raise ValueError("xs and ys must have the same length")
        if len(xs) < 2:
            raise ValueError("need at least two breakpoints")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError(f"breakpoints must span [0, 1], got [{xs[0]}, {xs[-1]}]")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoint x coordinates must be strictly increasing")
        if any(not 0.0 <= y <= 1.0 for y in ys):
            raise ValueError("function values must lie in [0, 1]")

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], name: str = "explicit"):
        xs, ys = zip(*points)
        return cls(xs, ys, name=name)

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.ys))

    def slopes(self) -> list[float]:
        return [
            (y1 - y0) / (x1 - x0)
            for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])
        ]

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def evaluate_many(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)):
            raise ValueError("arm coordinates must lie in [0, 1]")
        return np.interp(x, self.xs, self.ys)


def evaluate(f: PiecewiseLinearFunction, x: float) -> float:
    """Value of ``f`` at ``x``, exact at breakpoints."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"arm coordinate {x!r} outside [0, 1]")
    xs, ys = f.xs, f.ys
    i = bisect.bisect_right(xs, x) - 1
    if xs[i] == x:
        return ys[i]
    x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian reward noise with standard deviation ``sigma``."""

    sigma: float = 0.1

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError("sigma must be non-negative")


def sample_reward(f: PiecewiseLinearFunction, x: float, noise: NoiseModel,
                  rng: np.random.Generator) -> float:
    g = rng.standard_normal()
    return evaluate(f, x) + noise.sigma * g


def make_random_peak_instance(rng: np.random.Generator, peak=None) -> PiecewiseLinearFunction:
    """Tent through (0, 0), (x1, x2), (1, 0) with x1 ~ U(0,1), x2 ~ U(0.5,1).

    ``peak`` forces the draw ``(x1, x2)``; ``rng`` is then not touched.
    """
    if peak is None:
        x1 = rng.uniform(0.0, 1.0)
        x2 = rng.uniform(0.5, 1.0)
    else:
        x1, x2 = (float(v) for v in peak)
    name = f"random-peak({x1!r},{x2!r})"
    # x1 on an endpoint: the tent degenerates to a single ramp
    if x1 <= 0.0:
        return PiecewiseLinearFunction((0.0, 1.0), (x2, 0.0), name=name)
    if x1 >= 1.0:
        return PiecewiseLinearFunction((0.0, 1.0), (0.0, x2), name=name)
    return PiecewiseLinearFunction((0.0, x1, 1.0), (0.0, x2, 0.0), name=name)


def make_lower_bound_instance(K: int, k: int) -> PiecewiseLinearFunction:
    """Hard instance whose single peak sits at (k - 1/2)/K with height (k - 1/2)/K.

    Rises with slope 1 to the peak, falls with slope -1 until it hits zero at
    (2k - 1)/K, then stays at zero.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    if not 1 <= k <= K:
        raise ValueError(f"k must satisfy 1 <= k <= K, got k={k}, K={K}")
    peak = (k - 0.5) / K
    zero = (2 * k - 1) / K
    xs = [0.0, peak]
    ys = [0.0, peak]
    if zero < 1.0:
        xs += [zero, 1.0]
        ys += [0.0, 0.0]
    else:
        xs.append(1.0)
        ys.append(zero - 1.0)
    return PiecewiseLinearFunction(xs, ys, name=f"lower-bound:{K}:{k}")


def make_prop1_pair() -> tuple[PiecewiseLinearFunction, PiecewiseLinearFunction]:
    """Two functions that coincide on [0, 0.5]; only the first is quasiconcave."""
    f1 = PiecewiseLinearFunction(
        (0.0, 0.25, 0.5, 1.0), (0.0, 0.5, 0.0, 0.0), name="prop1:1")
    f2 = PiecewiseLinearFunction(
        (0.0, 0.25, 0.5, 0.75, 1.0), (0.0, 0.5, 0.0, 1.0, 0.0), name="prop1:2")
    return f1, f2


def make_explicit_instance(points: Sequence[Sequence[float]]) -> PiecewiseLinearFunction:
    return PiecewiseLinearFunction.from_points(points, name="explicit")


def check_lipschitz(f: PiecewiseLinearFunction, c: float) -> bool:
    return all(abs(s) <= c for s in f.slopes())


def check_quasiconcave(f: PiecewiseLinearFunction) -> bool:
    """True iff the breakpoint values rise weakly and then fall weakly."""
    ys = f.ys
    i = 1
    while i < len(ys) and ys[i] >= ys[i - 1]:
        i += 1
    while i < len(ys) and ys[i] <= ys[i - 1]:
        i += 1
    return i == len(ys)


def max_value(f: PiecewiseLinearFunction) -> tuple[float, float]:
    """``(argmax, max)`` over the breakpoints, ties toward the smallest x."""
    best = 0
    for i, y in enumerate(f.ys):
        if y > f.ys[best]:
            best = i
    return f.xs[best], f.ys[best]


@dataclass(frozen=True)
class InstanceSpec:
    """A nameable instance family.

    ``family`` is one of ``random-peak``, ``lower-bound``, ``prop1`` or
    ``explicit``; ``params`` carries ``(K, k)``, ``(member,)`` or the
    breakpoint list respectively.
    """

    family: str
    params: tuple = ()
    lipschitz_c: float | None = None

    def __post_init__(self):
        if self.family == "lower-bound":
            K, k = self.params
            if not 1 <= k <= K:
                raise ValueError(f"lower-bound family requires 1 <= k <= K, got {K}:{k}")
        elif self.family == "prop1":
            if self.params not in ((1,), (2,)):
                raise ValueError("prop1 member must be 1 or 2")
        elif self.family == "explicit":
            make_explicit_instance(self.params)
        elif self.family != "random-peak":
            raise ValueError(f"unknown instance family {self.family!r}")

    @property
    def label(self) -> str:
        if self.family == "lower-bound":
            return "lower-bound:%d:%d" % self.params
        if self.family == "prop1":
            return "prop1:%d" % self.params
        return self.family

    @property
    def is_random(self) -> bool:
        return self.family == "random-peak"

    def claimed_lipschitz(self, f: PiecewiseLinearFunction) -> float:
        if self.lipschitz_c is not None:
            return self.lipschitz_c
        if self.family == "lower-bound":
            return 1.0
        if self.family == "prop1":
            return 2.0 if self.params == (1,) else 4.0
        return lipschitz_constant(f)

    def build(self, rng: np.random.Generator | None = None) -> PiecewiseLinearFunction:
        if self.family == "random-peak":
            if rng is None:
                raise ValueError("random-peak instances need an rng")
            return make_random_peak_instance(rng)
        if self.family == "lower-bound":
            return make_lower_bound_instance(*self.params)
        if self.family == "prop1":
            return make_prop1_pair()[self.params[0] - 1]
        return make_explicit_instance(self.params)


def parse_instance(text: str, breakpoints=None) -> InstanceSpec:
    """Parse ``random-peak``, ``lower-bound:K:k``, ``prop1:1|2`` or ``explicit``."""
    parts = text.strip().split(":")
    head = parts[0]
    try:
        if head == "random-peak" and len(parts) == 1:
            return InstanceSpec("random-peak")
        if head == "lower-bound" and len(parts) == 3:
            return InstanceSpec("lower-bound", (int(parts[1]), int(parts[2])))
        if head == "prop1" and len(parts) == 2:
            return InstanceSpec("prop1", (int(parts[1]),))
    except ValueError as exc:
        raise ValueError(f"bad instance {text!r}: {exc}") from None
    if head == "explicit" and len(parts) == 1:
        if breakpoints is None:
            raise ValueError("explicit instance needs a breakpoint list")
        return InstanceSpec("explicit", tuple(tuple(float(v) for v in p) for p in breakpoints))
    raise ValueError(f"unknown instance {text!r}")


def grid_values(f: PiecewiseLinearFunction, K: int) -> np.ndarray:
    """``f(k/K)`` for k = 0..K, computed exactly as the step-wise path does."""
    return np.array([evaluate(f, k / K) for k in range(K + 1)], dtype=np.float64)


def lipschitz_constant(f: PiecewiseLinearFunction) -> float:
    """Largest absolute slope; for a random-peak tent max(x2/x1, x2/(1-x1))."""
    return max(abs(s) for s in f.slopes())
