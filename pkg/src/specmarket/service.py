"""Moments of the effective service time on an interruptible channel.

A job needing ``X`` units of work is served only while the primary user is
idle (OFF). Each ON period that starts before the work is done suspends the
job, which resumes where it left off, so the effective service time is
``X + Y_1 + ... + Y_N(X)`` with ``N(X)`` the number of ON periods
(renewals of the OFF clock) falling inside the work.

Closed-form second moments exist for five family combinations. Anything
else needs moments supplied by the caller or estimated by simulation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .distributions import ERLANG2, EXPONENTIAL, UNIFORM, ConfigurationError, DistSpec, moments


class ComboKind(enum.Enum):
    EXP_EXP_EXP = "Exp"
    ERL_ERL_ERL = "Erl"
    UNI_EXP_EXP = "UniExp"
    ERL_EXP_EXP = "ErlExp"
    EXP_ERL_ERL = "ExpErl"


_FAMILIES = {
    (EXPONENTIAL, EXPONENTIAL, EXPONENTIAL): ComboKind.EXP_EXP_EXP,
    (ERLANG2, ERLANG2, ERLANG2): ComboKind.ERL_ERL_ERL,
    (UNIFORM, EXPONENTIAL, EXPONENTIAL): ComboKind.UNI_EXP_EXP,
    (ERLANG2, EXPONENTIAL, EXPONENTIAL): ComboKind.ERL_EXP_EXP,
    (EXPONENTIAL, ERLANG2, ERLANG2): ComboKind.EXP_ERL_ERL,
}


@dataclass(frozen=True)
class ServiceMoments:
    m1: float
    m2: float

    def __post_init__(self):
        if not (self.m1 > 0 and math.isfinite(self.m1)):
            raise ConfigurationError(f"effective service mean must be positive and finite, got {self.m1!r}")
        # Small slack for round-off in the closed forms.
        if not self.m2 >= self.m1**2 * (1 - 1e-12):
            raise ConfigurationError(f"second moment {self.m2!r} below squared mean {self.m1**2!r}")


def combo_of(x: DistSpec, y: DistSpec, z: DistSpec) -> ComboKind | None:
    """Return the closed-form combination matching the families of (X, Y, Z), if any."""
    return _FAMILIES.get((x.kind, y.kind, z.kind))


def effective_first_moment(x: DistSpec, y: DistSpec, z: DistSpec) -> float:
    """``E[X] (1 + E[Y]/E[Z])``; holds for any families since only means enter."""
    return x.mean * (1.0 + y.mean / z.mean)


def exp_exp_exp_m2(mu_x: float, nu_on: float, nu_off: float) -> float:
    return (
        2 * nu_off**2 / (nu_on**2 * mu_x**2)
        + 2 * nu_off / (nu_on**2 * mu_x)
        + 4 * nu_off / (nu_on * mu_x**2)
        + 2 / mu_x**2
    )


def erl_erl_erl_m2(mu_x: float, nu_on: float, nu_off: float) -> float:
    return (
        6 * nu_off / (nu_on**2 * mu_x)
        + 12 * nu_off / (nu_on * mu_x**2)
        + 6 / mu_x**2
        + 8 * nu_off**3 * (3 * nu_off + 2 * mu_x) / (nu_on**2 * mu_x**2 * (2 * nu_off + mu_x) ** 2)
    )


def uni_exp_exp_m2(x_lo: float, x_up: float, nu_on: float, nu_off: float) -> float:
    """Uniform work with exponential ON/OFF periods.

    With exponential OFF periods the interruptions form a Poisson stream of
    rate ``nu_off`` on the work clock, giving
    ``E[X^2] (1 + nu_off/nu_on)^2 + 2 nu_off E[X] / nu_on^2``.
    """
    ex = (x_lo + x_up) / 2
    ex2 = (x_lo**2 + x_lo * x_up + x_up**2) / 3
    return ex2 * (1 + nu_off / nu_on) ** 2 + 2 * nu_off * ex / nu_on**2


def uni_exp_exp_m2_printed(x_lo: float, x_up: float, nu_on: float, nu_off: float) -> float:
    """An older closed form for the UniExp case, transcribed verbatim.

    Kept for comparison only: simulation rejects it (see the test suite), and it
    does not reduce to the uninterrupted ``E[X^2]`` as interruptions vanish.
    """
    span = x_up - x_lo
    numerator = (
        (x_up**3 - x_lo**3) * (4 * nu_off**3 + 16 * nu_off**2 * nu_on + 16 * nu_off * nu_on**2)
        + 42 * nu_off**2 * (x_up**2 - x_lo**2)
        + 6 * nu_off * span
        + 3 * (math.exp(-2 * nu_off * x_lo) - math.exp(-2 * nu_off * x_up))
    )
    return numerator / (48 * nu_off * nu_on**2 * span)


def erl_exp_exp_m2(mu_x: float, nu_on: float, nu_off: float) -> float:
    return (
        6 * nu_off**2 / (nu_on**2 * mu_x**2)
        + 4 * nu_off / (nu_on**2 * mu_x)
        + 12 * nu_off / (nu_on * mu_x**2)
        + 6 / mu_x**2
    )


def exp_erl_erl_m2(mu_x: float, nu_on: float, nu_off: float) -> float:
    return (
        4 * nu_off**3 / (nu_on**2 * mu_x**2 * (2 * nu_off + mu_x))
        + 3 * nu_off / (nu_on**2 * mu_x)
        + 4 * nu_off / (nu_on * mu_x**2)
        + 2 / mu_x**2
    )


def effective_second_moment(combo: ComboKind, *, mu_x: float | None = None, x_lo: float | None = None,
                            x_up: float | None = None, nu_on: float, nu_off: float) -> float:
    """E[X_e^2] for one of the closed-form combinations.

    Rates follow the density convention ``f(t) = r e^{-rt}`` (exponential) and
    ``f(t) = r^2 t e^{-rt}`` (Erlang-2), so an Erlang-2 period has mean ``2/r``.
    """
    if combo is ComboKind.UNI_EXP_EXP:
        if x_lo is None or x_up is None or mu_x is not None:
            raise ConfigurationError("UniExp needs x_lo and x_up (and no mu_x)")
        return uni_exp_exp_m2(x_lo, x_up, nu_on, nu_off)
    if mu_x is None or x_lo is not None or x_up is not None:
        raise ConfigurationError(f"{combo.value} needs mu_x (and no uniform bounds)")
    formula = {
        ComboKind.EXP_EXP_EXP: exp_exp_exp_m2,
        ComboKind.ERL_ERL_ERL: erl_erl_erl_m2,
        ComboKind.ERL_EXP_EXP: erl_exp_exp_m2,
        ComboKind.EXP_ERL_ERL: exp_erl_erl_m2,
    }[combo]
    return formula(mu_x, nu_on, nu_off)


def effective_moments(x: DistSpec, y: DistSpec, z: DistSpec) -> ServiceMoments:
    """Closed-form (E[X_e], E[X_e^2]) for a supported family combination."""
    combo = combo_of(x, y, z)
    if combo is None:
        raise ConfigurationError(
            f"no closed-form second moment for X={x.kind}, Y={y.kind}, Z={z.kind}; "
            "supply ServiceMoments explicitly or estimate them by simulation"
        )
    if combo is ComboKind.UNI_EXP_EXP:
        m2 = effective_second_moment(combo, x_lo=x.lo, x_up=x.hi, nu_on=y.rate, nu_off=z.rate)
    else:
        m2 = effective_second_moment(combo, mu_x=x.rate, nu_on=y.rate, nu_off=z.rate)
    return ServiceMoments(effective_first_moment(x, y, z), m2)


def uninterrupted_moments(x: DistSpec) -> ServiceMoments:
    return ServiceMoments(*moments(x))
