import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specmarket.delay import mean_delay
from specmarket.distributions import DistSpec
from specmarket.duopoly import (
    MarketRegion,
    best_response_exclusive,
    best_response_shared,
    classify_market,
    convergence_condition_duopoly,
    exclusive_cutoff,
    feasibility_inequality,
    indifference_cutoff,
    omega,
    p_eps,
    stage1_closed_form,
    stage1_delta,
    stage1_equilibrium,
    stage1_fixed_point,
    stage2_equilibrium,
    stage2_iterate,
    upper_price,
)
from specmarket.monopoly import ConsistencyError, convergence_condition_shared, equilibrium_shared
from specmarket.scenario import COMBOS, preset
from specmarket.service import ServiceMoments

EXP = preset("exp-light")
LIGHT = [preset(f"{c}-light") for c in COMBOS]


def coexisting_pairs(s):
    for c1 in np.linspace(0.05, 0.6, 6):
        u = upper_price(s, c1)
        for frac in (0.1, 0.4, 0.7, 0.95):
            yield float(c1), float(c1 + frac * (u - c1))


def test_indifference_cutoff_sign():
    assert indifference_cutoff(EXP, 0.3, 0.3, 0.2) == 0.0
    assert indifference_cutoff(EXP, 0.4, 0.3, 0.2) < 0
    t = mean_delay(EXP.delay_model, 0.2)
    assert indifference_cutoff(EXP, 0.1, 0.3, 0.2) == pytest.approx(0.2 / (t - 1.0))


def test_p_eps():
    assert p_eps(EXP) == pytest.approx(0.74)
    assert p_eps(EXP.with_(x=DistSpec.exponential(10.0))) == 1.0


def test_classification_and_boundaries():
    u = upper_price(EXP, 0.2)
    assert classify_market(EXP, 0.6, 0.5) is MarketRegion.EXCLUSIVE_MONOPOLY
    assert classify_market(EXP, 0.5, 0.5) is MarketRegion.EXCLUSIVE_MONOPOLY
    assert classify_market(EXP, 0.2, 0.5 * (0.2 + u)) is MarketRegion.COEXISTENCE
    assert classify_market(EXP, 0.2, u) is MarketRegion.SHARED_MONOPOLY
    assert classify_market(EXP, 0.2, u + 0.1) is MarketRegion.SHARED_MONOPOLY


def test_monopoly_regions():
    eq = stage2_equilibrium(EXP, 0.6, 0.5)
    assert (eq.p1, eq.p2) == (0.0, 0.5)
    eq = stage2_equilibrium(EXP, 0.4, 0.4)
    assert eq.p1 == 0.0 and eq.p2 == pytest.approx(0.6)
    eq = stage2_equilibrium(EXP, 0.3, 1.0)
    assert eq.region is MarketRegion.SHARED_MONOPOLY
    assert eq.p1 == pytest.approx(equilibrium_shared(EXP, 0.3).p_star) and eq.p2 == 0.0
    with pytest.raises(ValueError):
        stage2_equilibrium(EXP, -0.1, 0.5)


@pytest.mark.parametrize("s", LIGHT, ids=COMBOS)
def test_coexistence_invariants(s):
    for c1, c2 in coexisting_pairs(s):
        eq = stage2_equilibrium(s, c1, c2)
        assert eq.region is MarketRegion.COEXISTENCE
        assert eq.residual <= 1e-8
        assert 0 <= eq.p1 <= p_eps(s) and eq.p2 >= 0 and eq.p1 + eq.p2 <= 1 + 1e-12
        if eq.p2 > 0:
            assert 0 < eq.cutoff_bar < eq.cutoff_two
            assert eq.p1 == pytest.approx(s.type_cdf(eq.cutoff_bar), abs=1e-9)
            assert eq.p2 == pytest.approx(s.type_cdf(eq.cutoff_two) - s.type_cdf(eq.cutoff_bar), abs=1e-9)


def test_exclusive_priced_out_near_upper_boundary():
    # Close to u(c1) the indifferent type can sit beyond the exclusive cut-off;
    # the exclusive operator then serves nobody rather than a negative share.
    c1 = 0.5887
    eq = stage2_equilibrium(EXP, c1, 0.99 * upper_price(EXP, c1))
    assert eq.region is MarketRegion.COEXISTENCE
    assert eq.p2 == 0.0
    assert eq.p1 == pytest.approx(equilibrium_shared(EXP, c1).p_star)


@pytest.mark.parametrize("s", LIGHT, ids=COMBOS)
def test_omega_strictly_decreasing(s):
    for c1, c2 in coexisting_pairs(s):
        vals = [omega(s, c1, c2, p) for p in np.linspace(0, p_eps(s), 101)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(range(len(COMBOS))), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_user_choices_are_nash(i, c1, c2, theta):
    s = LIGHT[i]
    eq = stage2_equilibrium(s, c1, c2)
    a = eq.p1 * s.theta_max
    b = a + eq.p2 * s.theta_max
    u1 = s.reward - theta * eq.delay_at_p1 - c1
    u2 = s.reward - theta * s.x_mean - c2
    chosen = u1 if theta < a else u2 if theta < b else 0.0
    assert max(u1, u2, 0.0) <= chosen + 1e-7


def test_iteration_converges_to_equilibrium():
    out = stage1_equilibrium(EXP)
    tr = stage2_iterate(EXP, out.c1_star, out.c2_star)
    assert tr.converged
    assert tr.final == pytest.approx((out.p1_circ, out.p2_circ), abs=1e-7)
    again = stage2_iterate(EXP, out.c1_star, out.c2_star, p0=(out.p1_circ, out.p2_circ))
    assert again.iterations_used <= 1 or again.final_gap < 1e-9
    static = stage2_iterate(EXP, out.c1_star, out.c2_star, method="static")
    assert static.converged and static.final == pytest.approx(tr.final, abs=1e-7)


def test_iteration_caps_shared_share_and_validates():
    tr = stage2_iterate(EXP, 0.0, 0.99, p0=(1.0, 0.0), max_iter=5)
    assert all(p1 <= p_eps(EXP) for p1, _ in tr.iterates)
    with pytest.raises(ValueError):
        stage2_iterate(EXP, 0.1, 0.2, p0=(1.2, 0.0))
    with pytest.raises(ValueError):
        stage2_iterate(EXP, 0.1, 0.2, method="bold")


def test_undercut_shared_operator_vanishes():
    tr = stage2_iterate(EXP, 0.495, 0.5)
    p1, p2 = tr.final
    assert tr.converged and p1 < 0.02 and p1 + p2 == pytest.approx(0.5, abs=1e-6)


def test_duopoly_condition():
    fast = EXP.with_(x=DistSpec.exponential(2.0))
    cond = convergence_condition_duopoly(fast)
    assert cond.satisfied and cond.lhs == pytest.approx(5 / (7 / 3 - 0.5))
    assert cond.shared_lhs == pytest.approx(15 / 7)
    assert math.isinf(convergence_condition_duopoly(EXP).lhs)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.5, 20.0), st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_duopoly_condition_is_stricter(mu, on, off):
    s = EXP.with_(x=DistSpec.exponential(mu), y=DistSpec.exponential(on), z=DistSpec.exponential(off), epsilon=1e-3)
    d, m = convergence_condition_duopoly(s), convergence_condition_shared(s)
    if math.isfinite(m.lhs):
        assert d.lhs > m.lhs


def test_stage1_reference_numbers():
    assert stage1_delta(EXP) == pytest.approx(16 / 9 * 4 + 32)
    assert stage1_closed_form(EXP) == pytest.approx(0.1726, abs=1e-4)


@pytest.mark.parametrize("s", LIGHT, ids=COMBOS)
def test_stage1_invariants(s):
    out = stage1_equilibrium(s)
    p = out.p1_circ
    assert p == pytest.approx(s.reward / (s.theta_max * (4 * mean_delay(s.delay_model, p) - s.x_mean)), abs=1e-8)
    assert out.c2_star == 2 * out.c1_star
    assert out.upper_bound_ok
    lhs, rhs = feasibility_inequality(s, p)
    assert lhs > rhs
    # Stage II at the equilibrium prices reproduces the anticipated shares.
    eq = stage2_equilibrium(s, out.c1_star, out.c2_star)
    assert (eq.p1, eq.p2) == pytest.approx((out.p1_circ, out.p2_circ), abs=1e-8)
    assert best_response_shared(s, best_response_exclusive(s, out.c1_star)) == pytest.approx(out.c1_star, abs=1e-8)


@pytest.mark.parametrize("s", LIGHT, ids=COMBOS)
def test_closed_form_solves_fixed_point_with_effective_mean(s):
    # The explicit root takes E[X_e] where the fixed point has E[X]; with that
    # substitution the two agree, which locates the gap between the routes.
    p = stage1_closed_form(s)
    t = mean_delay(s.delay_model, p)
    assert p == pytest.approx(s.reward / (s.theta_max * (4 * t - s.service.m1)), rel=1e-10)
    out = stage1_equilibrium(s)
    assert out.route_gap > 1e-3
    with pytest.raises(ConsistencyError):
        stage1_equilibrium(s, strict=True)


def test_routes_agree_without_interruptions():
    # No interruptions: E[X_e] = E[X] and both routes coincide.
    s = EXP.with_(moments=ServiceMoments(1.0, 2.0))
    out = stage1_equilibrium(s, strict=True)
    assert out.route_gap < 1e-10


def test_fixed_point_bisection_fallback():
    assert stage1_fixed_point(EXP, gain=1.0, max_iter=1) == pytest.approx(stage1_fixed_point(EXP), abs=1e-10)


def test_best_responses():
    assert best_response_shared(EXP, 0.5) == 0.25
    flat = EXP.with_(moments=ServiceMoments(1.0, 2.0))
    # With T(p1) = E[X] there is no delay handicap and BR2(c1) = c1 / 2.
    assert best_response_exclusive(flat, 0.4, p1=0.0) == pytest.approx(0.2)


@pytest.mark.parametrize("s", LIGHT, ids=COMBOS)
def test_no_profitable_deviation_at_fixed_delay(s):
    # The equilibrium prices are best responses when the shared delay is held at
    # its equilibrium value, the assumption under which they are derived.
    out = stage1_equilibrium(s)
    t, x = mean_delay(s.delay_model, out.p1_circ), s.x_mean

    def shares(c1, c2):
        bar = (c2 - c1) / (t - x)
        two = exclusive_cutoff(s, c2)
        if bar < 0:
            return 0.0, s.type_cdf(two)
        bar = min(bar, two)
        return s.type_cdf(bar), s.type_cdf(two) - s.type_cdf(bar)

    r1 = out.c1_star * shares(out.c1_star, out.c2_star)[0]
    r2 = out.c2_star * shares(out.c1_star, out.c2_star)[1]
    grid = np.linspace(0, s.reward, 100)
    assert max(c * shares(c, out.c2_star)[0] for c in grid) <= r1 + 1e-12
    assert max(c * shares(out.c1_star, c)[1] for c in grid) <= r2 + 1e-12


def test_deviation_gain_when_delay_responds():
    # Once users re-equilibrate the delay, a unilateral price change pays off a
    # little: the derivation's fixed-delay best responses ignore that channel.
    out = stage1_equilibrium(EXP)
    r1 = out.c1_star * stage2_equilibrium(EXP, out.c1_star, out.c2_star).p1
    best = max(c * stage2_equilibrium(EXP, c, out.c2_star).p1 for c in np.linspace(0, 1, 100))
    assert 0 < best - r1 < 0.1 * r1
