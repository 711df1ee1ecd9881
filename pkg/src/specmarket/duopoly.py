"""Price competition between a shared-use and an exclusive-use operator.

Stage II: given prices ``(c1, c2)`` each user joins the operator with the
larger positive utility. Low types tolerate the shared channel's delay for
its lower price; the indifferent type is
``theta_bar(p1) = (c2 - c1) / (T(p1) - E[X])``.

Stage I: operators set prices anticipating the Stage II response. The best
responses are derived holding ``T(p1*)`` fixed, which gives ``c2* = 2 c1*``
and the self-consistency condition ``p = V / (theta_max (4 T(p) - E[X]))``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import bisect

from .delay import delay_derivative, mean_delay
from .monopoly import (
    BISECT_MAXITER,
    BISECT_XTOL,
    GAP_TOLERANCE,
    MAX_ITER,
    ROUTE_TOLERANCE,
    ConsistencyError,
    IterationTrace,
    _window_amplitude,
    convergence_condition_shared,
    cutoff_shared,
    equilibrium_shared,
)
from .scenario import Scenario


class MarketRegion(enum.Enum):
    EXCLUSIVE_MONOPOLY = "ExclusiveMonopoly"
    COEXISTENCE = "Coexistence"
    SHARED_MONOPOLY = "SharedMonopoly"


@dataclass(frozen=True)
class DuopolyEquilibrium:
    """Stage II outcome.

    ``region`` classifies the price pair. Close to the upper price boundary
    the pair can classify as coexistence while the exclusive operator still
    attracts nobody (``p2 == 0``).
    """

    p1: float
    p2: float
    cutoff_bar: float
    cutoff_two: float
    region: MarketRegion
    delay_at_p1: float
    residual: float = 0.0


@dataclass(frozen=True)
class StageOneOutcome:
    c1_star: float
    c2_star: float
    p1_circ: float
    p2_circ: float
    delta: float
    upper_bound_ok: bool
    p1_closed_form: float
    route_gap: float


def p_eps(s: Scenario) -> float:
    """Cap on the shared operator's joining probability, just below instability."""
    return min(1.0, 1.0 / (s.lam * s.service.m1) - s.epsilon)


def exclusive_cutoff(s: Scenario, c2: float) -> float:
    return max(0.0, s.reward - c2) / s.x_mean


def indifference_cutoff(s: Scenario, c1: float, c2: float, p1: float) -> float:
    """Type equally well off with either operator; negative iff ``c2 < c1``."""
    return (c2 - c1) / (mean_delay(s.delay_model, p1) - s.x_mean)


def upper_price(s: Scenario, c1: float) -> float:
    """``u(c1)``: exclusive prices at or above it leave the shared operator a monopoly."""
    t_eps = mean_delay(s.delay_model, p_eps(s))
    return (s.reward * (t_eps - s.x_mean) + s.x_mean * c1) / t_eps


def classify_market(s: Scenario, c1: float, c2: float) -> MarketRegion:
    if c2 <= c1:
        return MarketRegion.EXCLUSIVE_MONOPOLY
    if c2 >= upper_price(s, c1):
        return MarketRegion.SHARED_MONOPOLY
    return MarketRegion.COEXISTENCE


def omega(s: Scenario, c1: float, c2: float, p1: float) -> float:
    return s.type_cdf(indifference_cutoff(s, c1, c2, p1)) - p1


def stage2_response(s: Scenario, c1: float, c2: float, p1: float) -> tuple[float, float]:
    """Joining fractions when users expect the delay of load ``p1``.

    Three cases: the shared operator is undercut (``theta_bar < 0``), both
    serve users, or the exclusive operator is priced out (``theta_bar``
    beyond its own cut-off).
    """
    p1 = min(p1, p_eps(s))
    bar = indifference_cutoff(s, c1, c2, p1)
    theta2 = exclusive_cutoff(s, c2)
    if bar < 0:
        return 0.0, s.type_cdf(theta2)
    if bar <= theta2:
        return s.type_cdf(bar), s.type_cdf(theta2) - s.type_cdf(bar)
    return s.type_cdf(cutoff_shared(s, c1, p1)), 0.0


def stage2_equilibrium(s: Scenario, c1: float, c2: float) -> DuopolyEquilibrium:
    """Unique user equilibrium for a price pair.

    In coexistence the shared fraction is the root of
    ``Omega(p1) = F(theta_bar(p1)) - p1`` on ``[0, p_eps]``; if that root puts
    the indifferent type above the exclusive cut-off, the exclusive operator
    is priced out and the shared-monopoly fixed point applies instead.
    """
    if c1 < 0 or c2 < 0:
        raise ValueError(f"prices must be nonnegative, got ({c1!r}, {c2!r})")
    region = classify_market(s, c1, c2)
    theta2 = exclusive_cutoff(s, c2)
    cap = p_eps(s)
    if region is MarketRegion.EXCLUSIVE_MONOPOLY:
        p1, p2 = 0.0, s.type_cdf(theta2)
    else:
        p1 = None
        if region is MarketRegion.COEXISTENCE:
            if omega(s, c1, c2, cap) >= 0:
                root = cap
            else:
                root = bisect(lambda q: omega(s, c1, c2, q), 0.0, cap, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)
            if indifference_cutoff(s, c1, c2, root) <= theta2:
                p1 = root
        if p1 is None:
            p1 = min(equilibrium_shared(s, c1).p_star, cap)
        p2 = max(0.0, s.type_cdf(theta2) - s.type_cdf(indifference_cutoff(s, c1, c2, p1)))
    q1, q2 = stage2_response(s, c1, c2, p1)
    return DuopolyEquilibrium(
        p1=p1,
        p2=p2,
        cutoff_bar=indifference_cutoff(s, c1, c2, p1),
        cutoff_two=theta2,
        region=region,
        delay_at_p1=mean_delay(s.delay_model, p1),
        residual=max(abs(q1 - p1), abs(q2 - p2)),
    )


def stage2_iterate(s: Scenario, c1: float, c2: float, p0: tuple[float, float] = (0.0, 0.0),
                   alpha: float | None = None, max_iter: int = MAX_ITER, method: str = "adaptive") -> IterationTrace:
    """Adaptive (or static, ``alpha = 1``) expectation dynamics for the pair (p1, p2)."""
    if method not in ("static", "adaptive"):
        raise ValueError(f"method must be 'static' or 'adaptive', got {method!r}")
    if not all(0 <= v <= 1 for v in p0):
        raise ValueError(f"p0 must lie in [0, 1]^2, got {p0!r}")
    a = 1.0 if method == "static" else (s.alpha if alpha is None else alpha)
    cap = p_eps(s)
    p = (min(p0[0], cap), p0[1])
    iterates = [p]
    gap = math.inf
    for t in range(max_iter):
        q = stage2_response(s, c1, c2, p[0])
        nxt = (min((1 - a) * p[0] + a * q[0], cap), (1 - a) * p[1] + a * q[1])
        gap = max(abs(nxt[0] - p[0]), abs(nxt[1] - p[1]))
        iterates.append(nxt)
        p = nxt
        if gap < GAP_TOLERANCE:
            return IterationTrace(tuple(iterates), True, gap, t + 1)
    firsts = [it[0] for it in iterates]
    return IterationTrace(tuple(iterates), False, gap, max_iter, amplitude=_window_amplitude(firsts))


@dataclass(frozen=True)
class DuopolyCondition:
    satisfied: bool
    lhs: float
    bound: float
    shared_lhs: float


def convergence_condition_duopoly(s: Scenario, alpha: float | None = None) -> DuopolyCondition:
    """Sufficient condition ``T'(1) / (T(1) - E[X]) < 1 / alpha``; stricter than the shared monopoly's."""
    a = s.alpha if alpha is None else alpha
    t1 = mean_delay(s.delay_model, 1.0)
    lhs = math.inf if math.isinf(t1) else delay_derivative(s.delay_model, 1.0) / (t1 - s.x_mean)
    shared = convergence_condition_shared(s, a)
    return DuopolyCondition(lhs < 1.0 / a, lhs, 1.0 / a, shared.lhs)


def best_response_shared(s: Scenario, c2: float) -> float:
    return c2 / 2


def best_response_exclusive(s: Scenario, c1: float, p1: float | None = None) -> float:
    """Exclusive operator's best price against ``c1``.

    The formula holds the shared delay at ``T(p1)``. Without ``p1``, the price
    is made self-consistent: ``p1`` is the Stage II equilibrium it induces.
    """
    def formula(p):
        t = mean_delay(s.delay_model, p)
        return (s.reward * (t - s.x_mean) + c1 * s.x_mean) / (2 * t)

    if p1 is not None:
        return formula(p1)
    c2 = formula(0.0)
    for _ in range(200):
        nxt = formula(stage2_equilibrium(s, c1, c2).p1)
        if abs(nxt - c2) < 1e-13:
            return nxt
        c2 = nxt
    return c2


def stage1_delta(s: Scenario) -> float:
    m1, m2 = s.service.m1, s.service.m2
    return m1**2 * (s.lam * s.reward - 3 * s.theta_max) ** 2 + 8 * s.theta_max * s.lam * s.reward * m2


def stage1_closed_form(s: Scenario) -> float:
    m1 = s.service.m1
    return 2 * s.reward / (math.sqrt(stage1_delta(s)) + m1 * (s.lam * s.reward + 3 * s.theta_max))


def _stage1_map(s: Scenario, p: float) -> float:
    return s.reward / (s.theta_max * (4 * mean_delay(s.delay_model, p) - s.x_mean))


def stage1_fixed_point(s: Scenario, gain: float = 0.5, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Solve ``p = V / (theta_max (4 T(p) - E[X]))`` by damped iteration.

    Falls back to bisection when the iteration leaves the stable region or
    stalls.
    """
    p = 0.0
    limit = 1.0 / (s.lam * s.service.m1)
    for _ in range(max_iter):
        nxt = (1 - gain) * p + gain * _stage1_map(s, p)
        if not 0 <= nxt < min(1.0, limit):
            break
        if abs(nxt - p) < tol:
            return nxt
        p = nxt
    hi = min(1.0, limit * (1 - 1e-12))
    g = lambda q: q - _stage1_map(s, q)
    if g(hi) <= 0:
        return hi
    return bisect(g, 0.0, hi, xtol=1e-14, maxiter=BISECT_MAXITER)


def stage1_equilibrium(s: Scenario, strict: bool = False) -> StageOneOutcome:
    """Stage I price equilibrium and the user response it induces.

    ``p1_circ`` is the fixed point above, which is what Stage II actually
    returns at the equilibrium prices. ``p1_closed_form`` is the explicit
    quadratic root; it solves the fixed point with ``E[X_e]`` in place of
    ``E[X]``, so the two coincide only without interruptions. ``route_gap``
    reports the difference; ``strict=True`` raises when it exceeds 1e-6.
    """
    closed = stage1_closed_form(s)
    p1 = stage1_fixed_point(s)
    gap = abs(closed - p1)
    if strict and gap > ROUTE_TOLERANCE:
        raise ConsistencyError(f"closed-form p1={closed!r} and fixed point {p1!r} differ by {gap:.3g}")
    t = mean_delay(s.delay_model, p1)
    c1 = s.reward * (t - s.x_mean) / (4 * t - s.x_mean)
    c2 = 2 * c1
    p2 = s.type_cdf(exclusive_cutoff(s, c2)) - s.type_cdf(indifference_cutoff(s, c1, c2, p1))
    return StageOneOutcome(
        c1_star=c1,
        c2_star=c2,
        p1_circ=p1,
        p2_circ=p2,
        delta=stage1_delta(s),
        upper_bound_ok=c2 < upper_price(s, c1),
        p1_closed_form=closed,
        route_gap=gap,
    )


def feasibility_inequality(s: Scenario, p1: float) -> tuple[float, float]:
    """Both sides of ``2 T(p1) T(p_eps) > E[X] (3 T(p1) - T(p_eps))``."""
    t, t_eps = mean_delay(s.delay_model, p1), mean_delay(s.delay_model, p_eps(s))
    return 2 * t * t_eps, s.x_mean * (3 * t - t_eps)
