import math

import numpy as np
import pytest
from scipy import integrate, stats

from specmarket.distributions import (
    ConfigurationError,
    DistSpec,
    moments,
    sample_array,
    sample_residual_array,
    spawn_streams,
)

DISTS = [DistSpec.exponential(1.5), DistSpec.erlang2(0.7), DistSpec.uniform(0.1, 1.9), DistSpec.uniform(0.0, 2.0)]


def _frozen(d):
    if d.kind == "exp":
        return stats.expon(scale=1 / d.rate)
    if d.kind == "erlang2":
        return stats.gamma(2, scale=1 / d.rate)
    return stats.uniform(d.lo, d.hi - d.lo)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_moments_match_quadrature(d):
    rv = _frozen(d)
    m1, m2 = moments(d)
    lo, hi = rv.support()
    assert integrate.quad(lambda t: t * rv.pdf(t), lo, hi)[0] == pytest.approx(m1, rel=1e-8)
    assert integrate.quad(lambda t: t * t * rv.pdf(t), lo, hi)[0] == pytest.approx(m2, rel=1e-8)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_sampling_matches_law(d):
    x = sample_array(d, np.random.default_rng(1), 200_000)
    assert stats.kstest(x, _frozen(d).cdf).pvalue > 1e-3


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_residual_life_law(d):
    # Density P(D > t) / E[D]; its mean is E[D^2] / (2 E[D]).
    m1, m2 = moments(d)
    r = sample_residual_array(d, np.random.default_rng(2), 200_000)
    assert r.mean() == pytest.approx(m2 / (2 * m1), rel=0.01)
    assert stats.kstest(r, _residual_cdf(d)).pvalue > 1e-3


def _residual_cdf(d):
    """Integral of P(D > u) / E[D] from 0 to t, worked out per family."""
    if d.kind == "exp":
        return stats.expon(scale=1 / d.rate).cdf
    if d.kind == "erlang2":
        e, g = stats.expon(scale=1 / d.rate), stats.gamma(2, scale=1 / d.rate)
        return lambda t: 0.5 * e.cdf(t) + 0.5 * g.cdf(t)
    a, w = d.lo, d.hi - d.lo
    m1 = a + w / 2

    def cdf(t):
        t = np.clip(t, 0, d.hi)
        inner = np.clip(t - a, 0, w)
        return (np.minimum(t, a) + inner - inner**2 / (2 * w)) / m1
    return cdf


def test_residual_cdf_oracle_matches_quadrature():
    for d in DISTS:
        rv, m1 = _frozen(d), moments(d)[0]
        for t in (0.05, 0.5, 1.2):
            direct = integrate.quad(lambda u: rv.sf(u) / m1, 0, t)[0]
            assert _residual_cdf(d)(t) == pytest.approx(direct, abs=1e-9)


def test_streams_are_reproducible_and_distinct():
    a = [g.random(3) for g in spawn_streams(7, 4)]
    b = [g.random(3) for g in spawn_streams(7, 4)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])


@pytest.mark.parametrize("bad", [
    dict(kind="exp", rate=0.0),
    dict(kind="exp", rate=-1.0),
    dict(kind="exp", rate=math.inf),
    dict(kind="erlang2", rate=None),
    dict(kind="uniform", lo=1.0, hi=1.0),
    dict(kind="uniform", lo=-0.5, hi=1.0),
    dict(kind="weibull", rate=1.0),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ConfigurationError):
        DistSpec(**bad)


def test_dict_round_trip_and_unknown_keys():
    for d in DISTS:
        assert DistSpec.from_dict(d.to_dict()) == d
    with pytest.raises(ConfigurationError, match="unknown keys"):
        DistSpec.from_dict({"kind": "exp", "rate": 1.0, "shape": 2})
    with pytest.raises(ConfigurationError):
        DistSpec.from_dict({"kind": "exp", "rate": "fast"})
