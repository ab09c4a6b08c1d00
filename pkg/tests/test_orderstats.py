import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.distributions import Exponential, HalfNormal, MaxOf, PointMass, TwoPoint, Uniform
from boxlab.errors import ConfigError
from boxlab.orderstats import (
    alpha_quantile,
    beta_threshold,
    gaussian_max_log_cdf,
    gaussian_max_tail,
    gordon_bounds,
    hazard_profile,
    order_stat_max_mean,
    tail_contribution,
)

# mpmath oracle: E[max of m half-normals] = int_0^inf 1 - erf(x/sqrt 2)^m dx
HALFNORMAL_MAX = {
    8: 1.783367077881363,
    64: 2.596110765146650,
    256: 3.044225498608452,
    10_000: 4.018795490530415,
}


@pytest.mark.parametrize("m,expected", sorted(HALFNORMAL_MAX.items()))
def test_halfnormal_expected_max_matches_oracle(m, expected):
    assert order_stat_max_mean(HalfNormal(1.0), m) == pytest.approx(expected, rel=1e-9)


def test_halfnormal_oracle_is_reproducible():
    mp.mp.dps = 30
    val = mp.quad(lambda x: 1 - mp.erf(x / mp.sqrt(2)) ** 64, [0, 3, 8, mp.inf])
    assert float(val) == pytest.approx(HALFNORMAL_MAX[64], rel=1e-12)


def test_exponential_harmonic_numbers():
    for m in (1, 2, 4, 10, 100, 1000):
        h = math.fsum(1.0 / i for i in range(1, m + 1))
        assert order_stat_max_mean(Exponential(1.0), m) == pytest.approx(h, rel=1e-12)
    assert order_stat_max_mean(Exponential(1.0), 4) == pytest.approx(25 / 12)


@settings(max_examples=25, deadline=None)
@given(m=st.floats(1.0, 5000.0))
def test_closed_form_agrees_with_quadrature(m):
    for d in (Exponential(2.0), Uniform(1.0, 3.0)):
        a = order_stat_max_mean(d, m)
        b = order_stat_max_mean(d, m, method="quadrature")
        assert a == pytest.approx(b, rel=1e-8)


def test_atomic_closed_forms():
    n = 1000
    d = TwoPoint(float(n), 1.0 / n)
    assert order_stat_max_mean(d, n) == pytest.approx(632.3045752290360, rel=1e-12)
    assert order_stat_max_mean(PointMass(3.0), 17) == 3.0
    # MaxOf composes multiplicatively
    assert order_stat_max_mean(MaxOf(Exponential(), 5), 4) == pytest.approx(
        order_stat_max_mean(Exponential(), 20), rel=1e-9
    )


def test_alpha_quantile():
    assert alpha_quantile(Exponential(1.0), 100) == pytest.approx(math.log(100))
    assert alpha_quantile(Uniform(0.0, 1.0), 4) == pytest.approx(0.75)
    assert alpha_quantile(Exponential(1.0), 1) == 0.0
    with pytest.raises(ConfigError):
        alpha_quantile(Exponential(1.0), 0.5)


def test_beta_threshold_exponential_oracle():
    # beta solves x e^{-x} + e^{-x} = 1/10 for Exp(1)
    mp.mp.dps = 30
    root = mp.findroot(lambda x: (x + 1) * mp.exp(-x) - mp.mpf(1) / 10, 3.9)
    assert float(root) == pytest.approx(3.889720169867429, rel=1e-14)
    assert beta_threshold(Exponential(1.0), 10) == pytest.approx(float(root), abs=1e-7)


@pytest.mark.parametrize("dist", [Exponential(1.0), HalfNormal(1.0), Uniform(0, 2), TwoPoint(50.0, 0.02)],
                         ids=lambda d: d.kind)
@pytest.mark.parametrize("m", [2.0, 10.0, 1000.0])
def test_beta_defining_property(dist, m):
    b = beta_threshold(dist, m)
    target = dist.mean() / m
    assert tail_contribution(dist, b) <= target * (1 + 1e-6) + 1e-12
    # smallest such threshold: slightly below it the tail is too heavy
    if b > 1e-6:
        assert tail_contribution(dist, b * (1 - 1e-3)) >= target * (1 - 1e-6) or isinstance(dist, TwoPoint)


def test_naive_adversary_beta_for_twopoint():
    n = 1000
    b = beta_threshold(MaxOf(TwoPoint(float(n), 1.0 / n), n), float(n) ** 2)
    sigma_b = 6 * b * math.sqrt(math.log(n))
    assert sigma_b == pytest.approx(15769.5653092708, rel=1e-9)


def test_tail_contribution_against_sampling(rng):
    d = HalfNormal(1.0)
    x = d.sample(rng, 400_000)
    t = 1.3
    mc = np.mean(x * (x > t))
    se = np.std(x * (x > t)) / math.sqrt(x.size)
    assert abs(tail_contribution(d, t) - mc) < 4 * se


def test_gordon_bounds_oracle():
    lo, hi = gordon_bounds(1.0)
    assert lo == pytest.approx(0.7580292754808566, rel=1e-14)
    assert hi == pytest.approx(0.8790146377404283, rel=1e-14)
    assert lo <= 0.8413447460685429 <= hi
    with pytest.raises(ConfigError):
        gordon_bounds(0.0)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(1e-3, 30.0))
def test_gordon_bounds_bracket_phi(t):
    lo, hi = gordon_bounds(t)
    phi = float(mp.ncdf(t))
    assert lo <= phi * (1 + 1e-15) and phi <= hi * (1 + 1e-15)


def test_gaussian_max_tail_and_log_form():
    assert gaussian_max_tail(1, 1.0, 0.0) == pytest.approx(0.5)
    assert gaussian_max_tail(10, 2.0, 1.0) == pytest.approx(float(mp.ncdf(0.5) ** 10), rel=1e-12)
    assert gaussian_max_log_cdf(math.log(10), 1.0, 1.0) == pytest.approx(float(10 * mp.log(mp.ncdf(1))), rel=1e-12)
    # deep upper tail does not underflow to log 1 = 0
    lc = gaussian_max_log_cdf(0.0, 1.0, 30.0)
    assert lc < 0 and lc == pytest.approx(-float(mp.ncdf(-30)), rel=1e-10)
    assert gaussian_max_log_cdf(1e7, 1.0, math.sqrt(5e6) + 1) == -math.inf


def test_hazard_profile():
    h = hazard_profile(Exponential(2.0))
    assert h.is_mhr and np.allclose(h.hazard, 2.0)
    h = hazard_profile(TwoPoint(3.0, 0.5))
    assert not h.is_mhr and h.rejected
