"""Pricing and user equilibria for markets built on interruptible spectrum.

A shared-use operator serves users over a channel the licensed user keeps
reclaiming (an M/G/1 queue with preemptive-resume interruptions); an
exclusive-use operator leases clean channels. The package computes delays,
user equilibria, optimal prices, and the price competition between the two.
"""
from .delay import DelayModel, delay_derivative, mean_delay, mean_waiting, stability_threshold
from .distributions import ConfigurationError, DistSpec
from .duopoly import (
    MarketRegion,
    classify_market,
    convergence_condition_duopoly,
    stage1_equilibrium,
    stage2_equilibrium,
    stage2_iterate,
)
from .monopoly import (
    ConsistencyError,
    convergence_condition_shared,
    equilibrium_exclusive,
    equilibrium_shared,
    iterate_shared,
)
from .pricing import (
    revenue_optimal_exclusive,
    revenue_optimal_shared,
    social_optimal_exclusive,
    social_optimal_shared,
)
from .scenario import PRESETS, Scenario, load_scenario, preset
from .service import ComboKind, ServiceMoments, effective_moments
from .simulation import SimConfig, simulate_effective_service, simulate_shared_queue

__version__ = "0.1.0"
