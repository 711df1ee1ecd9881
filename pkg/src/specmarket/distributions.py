"""Parametric nonnegative random variables for service, ON and OFF periods.

Three families are supported, matching the channel models used throughout
the package: exponential, Erlang with shape 2, and uniform. Every spec is
immutable and validated on construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

EXPONENTIAL = "exp"
ERLANG2 = "erlang2"
UNIFORM = "uniform"
KINDS = (EXPONENTIAL, ERLANG2, UNIFORM)


class ConfigurationError(ValueError):
    """Raised for invalid parameters or malformed configuration input."""


@dataclass(frozen=True)
class DistSpec:
    kind: str
    rate: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind in (EXPONENTIAL, ERLANG2):
            if self.rate is None or not math.isfinite(self.rate) or self.rate <= 0:
                raise ConfigurationError(f"{self.kind}: rate must be a finite positive number, got {self.rate!r}")
            if self.lo is not None or self.hi is not None:
                raise ConfigurationError(f"{self.kind}: takes only 'rate'")
        elif self.kind == UNIFORM:
            if self.rate is not None:
                raise ConfigurationError("uniform: takes only 'lo' and 'hi'")
            if self.lo is None or self.hi is None:
                raise ConfigurationError("uniform: both 'lo' and 'hi' are required")
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not 0 <= self.lo < self.hi:
                raise ConfigurationError(f"uniform: need 0 <= lo < hi, got lo={self.lo!r}, hi={self.hi!r}")
        else:
            raise ConfigurationError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def exponential(cls, rate: float) -> DistSpec:
        return cls(EXPONENTIAL, rate=float(rate))

    @classmethod
    def erlang2(cls, rate: float) -> DistSpec:
        return cls(ERLANG2, rate=float(rate))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> DistSpec:
        return cls(UNIFORM, lo=float(lo), hi=float(hi))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DistSpec:
        if not isinstance(data, dict):
            raise ConfigurationError(f"distribution must be a JSON object, got {type(data).__name__}")
        kind = data.get("kind")
        allowed = {"kind", "rate"} if kind in (EXPONENTIAL, ERLANG2) else {"kind", "lo", "hi"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"distribution {kind!r}: unknown keys {sorted(unknown)}")
        try:
            params = {k: float(v) for k, v in data.items() if k != "kind"}
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"distribution {kind!r}: non-numeric parameter ({exc})") from None
        return cls(kind, **params)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == UNIFORM:
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        return {"kind": self.kind, "rate": self.rate}

    @property
    def mean(self) -> float:
        return moments(self)[0]

    @property
    def second_moment(self) -> float:
        return moments(self)[1]


def moments(d: DistSpec) -> tuple[float, float]:
    """Exact ``(E[D], E[D**2])``."""
    if d.kind == EXPONENTIAL:
        return 1.0 / d.rate, 2.0 / d.rate**2
    if d.kind == ERLANG2:
        return 2.0 / d.rate, 6.0 / d.rate**2
    a, b = d.lo, d.hi
    return (a + b) / 2.0, (a * a + a * b + b * b) / 3.0


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators derived from one seed, one per stochastic process."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def sample(d: DistSpec, rng: np.random.Generator) -> float:
    return float(sample_array(d, rng, 1)[0])


def sample_array(d: DistSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    # Erlang-2 is drawn as an explicit sum of two exponentials.
    if d.kind == EXPONENTIAL:
        return rng.exponential(1.0 / d.rate, size)
    if d.kind == ERLANG2:
        return rng.exponential(1.0 / d.rate, (size, 2)).sum(axis=1)
    return d.lo + (d.hi - d.lo) * rng.random(size)


def sample_residual_array(d: DistSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw from the stationary residual-life law with density ``P(D > t) / E[D]``.

    This is the remaining length of the period in progress when a renewal
    process is observed at an arbitrary time.
    """
    if d.kind == EXPONENTIAL:
        return rng.exponential(1.0 / d.rate, size)
    if d.kind == ERLANG2:
        # Residual of Erlang-2 is an equal mixture of Exp(rate) and Erlang-2(rate).
        first = rng.exponential(1.0 / d.rate, size)
        second = rng.exponential(1.0 / d.rate, size)
        return first + np.where(rng.random(size) < 0.5, 0.0, second)
    a, b = d.lo, d.hi
    width = b - a
    target = rng.random(size) * (a + b) / 2.0
    flat = target <= a
    excess = np.where(flat, 0.0, target - a)
    tail = a + width - np.sqrt(np.maximum(width * width - 2.0 * width * excess, 0.0))
    return np.where(flat, target, tail)
