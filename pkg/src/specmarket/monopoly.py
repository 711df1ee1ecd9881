"""User equilibria in the two monopoly markets.

Shared-use: the operator's single interruptible channel is an M/G/1 queue,
so the delay a user expects depends on how many others join. A type-theta
user joins while ``V - theta * T(p) - c > 0``; the equilibrium joining
probability solves ``p = F(theta_1(p))``.

Exclusive-use: each user gets a dedicated channel, the delay is ``E[X]``
and the equilibrium is explicit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect

from .delay import delay_derivative, mean_delay
from .scenario import Scenario

BISECT_XTOL = 1e-10
BISECT_MAXITER = 200
ROUTE_TOLERANCE = 1e-6
GAP_TOLERANCE = 1e-9
MAX_ITER = 100_000


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


@dataclass(frozen=True)
class EquilibriumResult:
    p_star: float
    cutoff_theta: float
    delay_at_eq: float
    method: str
    residual: float
    closed_form: float | None = None


@dataclass(frozen=True)
class IterationTrace:
    """Iterates of a joining-probability dynamic.

    ``overloaded_at`` is the first period whose offered load exceeds one; the
    queue has no steady state there, so the run stops and is not converged.
    When the step budget runs out, ``amplitude`` is the spread of the last
    100 iterates (first component for pairs).
    """

    iterates: tuple
    converged: bool
    final_gap: float
    iterations_used: int
    overloaded_at: int | None = None
    amplitude: float = 0.0

    @property
    def final(self):
        return self.iterates[-1]


def cutoff_shared(s: Scenario, c1: float, p: float) -> float:
    """Highest type still better off joining, ``(V - c1) / T(p)``; 0 if none."""
    if c1 >= s.reward:
        return 0.0
    delay = mean_delay(s.delay_model, p)
    if math.isinf(delay):
        return 0.0
    return (s.reward - c1) / delay


def best_reply_shared(s: Scenario, c1: float, p: float) -> float:
    """``q(p) = F(theta_1(p))``, the fraction that joins when all expect delay T(p)."""
    return s.type_cdf(cutoff_shared(s, c1, p))


def phi(s: Scenario, c1: float, p: float) -> float:
    return best_reply_shared(s, c1, p) - p


def lower_price_bound(s: Scenario) -> float:
    """Price at or below which every user joins; 0 when T(1) is infinite."""
    t1 = mean_delay(s.delay_model, 1.0)
    return 0.0 if math.isinf(t1) else max(0.0, s.reward - s.theta_max * t1)


def closed_form_shared(s: Scenario, c1: float) -> float:
    """Explicit root of the equilibrium quadratic for uniform user types."""
    if c1 >= s.reward:
        return 0.0
    t1 = mean_delay(s.delay_model, 1.0)
    # Unclamped bound: with V < theta_max T(1) even a free channel is not full.
    if not math.isinf(t1) and c1 <= s.reward - s.theta_max * t1:
        return 1.0
    lam, theta, surplus = s.lam, s.theta_max, s.reward - c1
    m1, m2 = s.service.m1, s.service.m2
    pi = 2 * lam * theta * surplus * m2 + m1**2 * (lam * (c1 - s.reward) + theta) ** 2
    denom = lam * theta * (2 * m1**2 - m2)
    if abs(denom) > 1e-9 * lam * theta * m2:
        root = (-math.sqrt(pi) + m1 * (lam * surplus + theta)) / denom
    else:
        # Same root after multiplying through by the conjugate; avoids 0/0.
        root = 2 * surplus / (m1 * (lam * surplus + theta) + math.sqrt(pi))
    return min(1.0, max(0.0, root))


def equilibrium_shared(s: Scenario, c1: float) -> EquilibriumResult:
    """Unique equilibrium joining probability for price ``c1``.

    Found by bisection on the strictly decreasing ``Phi(p) = F(theta_1(p)) - p``
    and cross-checked against the closed form.

    Raises
    ------
    ConsistencyError
        If the two routes differ by more than 1e-6.
    """
    if c1 < 0:
        raise ValueError(f"price must be nonnegative, got {c1!r}")
    f0, f1 = phi(s, c1, 0.0), phi(s, c1, 1.0)
    if f0 <= 0:
        p = 0.0
    elif f1 >= 0:
        p = 1.0
    else:
        p = bisect(lambda q: phi(s, c1, q), 0.0, 1.0, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)
    closed = closed_form_shared(s, c1)
    if abs(closed - p) > ROUTE_TOLERANCE:
        raise ConsistencyError(f"bisection p*={p!r} and closed form {closed!r} disagree at c1={c1!r}")
    return EquilibriumResult(
        p_star=p,
        cutoff_theta=cutoff_shared(s, c1, p),
        delay_at_eq=mean_delay(s.delay_model, p),
        method="bisection",
        residual=abs(phi(s, c1, p)),
        closed_form=closed,
    )


def equilibrium_exclusive(s: Scenario, c2: float) -> EquilibriumResult:
    if c2 < 0:
        raise ValueError(f"price must be nonnegative, got {c2!r}")
    theta2 = max(0.0, s.reward - c2) / s.x_mean
    p = s.type_cdf(theta2)
    return EquilibriumResult(p_star=p, cutoff_theta=theta2, delay_at_eq=s.x_mean,
                             method="closed_form", residual=0.0)


def _window_amplitude(values) -> float:
    tail = values[-100:]
    return max(tail) - min(tail)


def iterate_shared(s: Scenario, c1: float, p0: float, method: str = "adaptive",
                   max_iter: int = MAX_ITER, alpha: float | None = None) -> IterationTrace:
    """Run static (``alpha = 1``) or adaptive expectation dynamics from ``p0``.

    ``p[t+1] = (1 - alpha) p[t] + alpha q(p[t])``. A period with offered load
    above one has no steady-state delay to learn from, so the run is declared
    divergent there.
    """
    if method not in ("static", "adaptive"):
        raise ValueError(f"method must be 'static' or 'adaptive', got {method!r}")
    if not 0 <= p0 <= 1:
        raise ValueError(f"p0 must lie in [0, 1], got {p0!r}")
    a = 1.0 if method == "static" else (s.alpha if alpha is None else alpha)
    iterates = [p0]
    p, gap = p0, math.inf
    for t in range(max_iter):
        if s.delay_model.load(p) > 1.0:
            return IterationTrace(tuple(iterates), False, gap, t, overloaded_at=t)
        nxt = (1 - a) * p + a * best_reply_shared(s, c1, p)
        gap = abs(nxt - p)
        iterates.append(nxt)
        p = nxt
        if gap < GAP_TOLERANCE:
            return IterationTrace(tuple(iterates), True, gap, t + 1)
    return IterationTrace(tuple(iterates), False, gap, max_iter, amplitude=_window_amplitude(iterates))


@dataclass(frozen=True)
class ConvergenceCondition:
    satisfied: bool
    lhs: float
    bound: float


def convergence_condition_shared(s: Scenario, alpha: float | None = None) -> ConvergenceCondition:
    """Sufficient condition ``T'(1) / T(1) < 1 / alpha`` for global convergence."""
    a = s.alpha if alpha is None else alpha
    t1 = mean_delay(s.delay_model, 1.0)
    lhs = math.inf if math.isinf(t1) else delay_derivative(s.delay_model, 1.0) / t1
    return ConvergenceCondition(lhs < 1.0 / a, lhs, 1.0 / a)
