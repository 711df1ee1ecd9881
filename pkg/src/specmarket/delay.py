"""Mean delay of the shared channel viewed as an M/G/1 queue.

Delays are extended-valued: at or beyond the stability threshold the mean
delay is ``math.inf`` rather than a large sentinel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import ConfigurationError
from .service import ServiceMoments


@dataclass(frozen=True)
class DelayModel:
    """Poisson arrivals of rate ``lam`` thinned by a joining probability ``p``."""

    lam: float
    moments: ServiceMoments
    x_mean: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigurationError(f"arrival rate must be positive, got {self.lam!r}")
        if not self.x_mean > 0:
            raise ConfigurationError(f"E[X] must be positive, got {self.x_mean!r}")

    def load(self, p: float) -> float:
        return self.lam * p * self.moments.m1


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")


def mean_waiting(m: DelayModel, p: float) -> float:
    """Pollaczek-Khinchine mean wait at effective arrival rate ``lam * p``."""
    _check_probability(p)
    rho = m.load(p)
    if rho >= 1.0:
        return math.inf
    return m.lam * p * m.moments.m2 / (2.0 * (1.0 - rho))


def mean_delay(m: DelayModel, p: float) -> float:
    w = mean_waiting(m, p)
    return w if math.isinf(w) else w + m.moments.m1


def delay_derivative(m: DelayModel, p: float) -> float:
    """d mean_delay / dp, closed form; ``inf`` where the delay is infinite."""
    _check_probability(p)
    rho = m.load(p)
    if rho >= 1.0:
        return math.inf
    return m.lam * m.moments.m2 / (2.0 * (1.0 - rho) ** 2)


def stability_threshold(m: DelayModel) -> float:
    """Joining probability at which the offered load reaches one (may exceed 1)."""
    return 1.0 / (m.lam * m.moments.m1)
