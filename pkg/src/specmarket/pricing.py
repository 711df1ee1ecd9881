"""Revenue- and welfare-maximizing admission prices for the two monopolies."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .delay import mean_delay
from .monopoly import equilibrium_exclusive, equilibrium_shared, lower_price_bound
from .scenario import Scenario

SCAN_POINTS = 256
PRICE_TOL = 1e-8


@dataclass(frozen=True)
class PricingResult:
    optimal_price: float
    optimal_value: float
    argmax_aux: float
    curve: tuple[tuple[float, float], ...] | None = None


def maximize_1d(f, lo: float, hi: float, points: int = SCAN_POINTS, tol: float = PRICE_TOL):
    """Maximize ``f`` on ``[lo, hi]``: coarse grid scan, then golden section.

    The scan keeps the search honest when unimodality fails (for instance at a
    stability kink where ``f`` drops to ``-inf``). Returns ``(x, f(x), grid)``.
    """
    grid = np.linspace(lo, hi, points)
    values = np.array([f(x) for x in grid])
    i = int(np.argmax(values))
    curve = tuple(zip(grid.tolist(), values.tolist()))
    if i == 0 or i == points - 1:
        return float(grid[i]), float(values[i]), curve
    a, c = grid[i - 1], grid[i + 1]
    # A tie with a neighbour (symmetric peak) puts the maximum between them.
    inner = [x for x in (grid[i], (grid[i] + c) / 2, (a + grid[i]) / 2) if f(x) > values[i - 1] and f(x) > values[i + 1]]
    if not inner:
        return float(grid[i]), float(values[i]), curve
    res = minimize_scalar(lambda x: -f(x), bracket=(a, inner[0], c), method="golden", options={"xtol": tol})
    x = float(res.x)
    if not grid[i - 1] <= x <= grid[i + 1] or -res.fun < values[i]:
        return float(grid[i]), float(values[i]), curve
    return x, float(-res.fun), curve


def revenue_shared(s: Scenario, c1: float) -> float:
    return c1 * equilibrium_shared(s, c1).p_star


def welfare_shared(s: Scenario, c1: float) -> float:
    """Aggregate utility of joining users at the equilibrium for price ``c1``."""
    p = equilibrium_shared(s, c1).p_star
    if p == 0.0:
        return 0.0
    cutoff = p * s.theta_max
    return s.reward * p - cutoff**2 / (2 * s.theta_max) * mean_delay(s.delay_model, p)


def welfare_of_cutoff(s: Scenario, cutoff: float) -> float:
    """Welfare when exactly the types below ``cutoff`` join; ``-inf`` if unstable."""
    p = min(1.0, cutoff / s.theta_max)
    delay = mean_delay(s.delay_model, p)
    if math.isinf(delay):
        return -math.inf
    return s.reward * cutoff / s.theta_max - cutoff**2 / (2 * s.theta_max) * delay


def revenue_optimal_shared(s: Scenario) -> PricingResult:
    lo, hi = lower_price_bound(s), s.reward
    price, revenue, curve = maximize_1d(lambda c: revenue_shared(s, c), lo, hi)
    return PricingResult(price, revenue, equilibrium_shared(s, price).p_star, curve)


def social_optimal_shared(s: Scenario) -> PricingResult:
    """Optimize over the cut-off type, then recover the price that induces it."""
    cutoff, welfare, curve = maximize_1d(lambda t: welfare_of_cutoff(s, t), 0.0, s.theta_max)
    if cutoff == 0.0:
        return PricingResult(s.reward, 0.0, 0.0, curve)
    price = s.reward - cutoff * mean_delay(s.delay_model, cutoff / s.theta_max)
    return PricingResult(price, welfare, cutoff, curve)


def revenue_exclusive(s: Scenario, c2: float) -> float:
    return c2 * equilibrium_exclusive(s, c2).p_star


def welfare_exclusive(s: Scenario, c2: float) -> float:
    cutoff = min(equilibrium_exclusive(s, c2).cutoff_theta, s.theta_max)
    return s.reward * cutoff / s.theta_max - cutoff**2 / (2 * s.theta_max) * s.x_mean


def revenue_optimal_exclusive(s: Scenario) -> PricingResult:
    """Half the reward, unless even that price leaves every type joining."""
    if s.reward <= 2 * s.theta_max * s.x_mean:
        price = s.reward / 2
        return PricingResult(price, revenue_exclusive(s, price), equilibrium_exclusive(s, price).p_star)
    price, revenue, curve = maximize_1d(lambda c: revenue_exclusive(s, c), 0.0, s.reward)
    return PricingResult(price, revenue, equilibrium_exclusive(s, price).p_star, curve)


def social_optimal_exclusive(s: Scenario) -> PricingResult:
    return PricingResult(0.0, welfare_exclusive(s, 0.0), min(s.reward / s.x_mean, s.theta_max))
