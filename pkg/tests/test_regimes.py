import math

import numpy as np
import pytest

from boxlab.distributions import Exponential, HalfNormal, TwoPoint, Uniform
from boxlab.errors import ConfigError
from boxlab.instance import NoiseProfile
from boxlab.orderstats import alpha_quantile, order_stat_max_mean
from boxlab.distributions import MaxOf
from boxlab.regimes import (
    SCALED_LINEAR_OVERRIDES,
    SIGMA_S_COEF,
    build_construction,
    classify,
    construct_linear_adversary,
    construct_naive_adversary,
    exact_prefix_profile,
)


def test_naive_adversary_twopoint_n1000():
    n = 1000
    cons = construct_naive_adversary(TwoPoint(float(n), 1.0 / n), n)
    # 6 ln 1000 = 41.45 rounds to 41
    assert cons.params["large_count"] == 41
    assert cons.params["exact_count"] == 959
    assert cons.params["sigma_b"] == pytest.approx(15769.5653092708, rel=1e-9)
    sig = cons.profile.sigma
    assert np.all(sig[:959] == 0) and np.all(sig[959:] == cons.params["sigma_b"])


def test_naive_adversary_exponential_count():
    cons = construct_naive_adversary(Exponential(1.0), 10_000)
    assert cons.params["large_count"] == 55


def test_naive_adversary_small_n_fails():
    with pytest.raises(ConfigError):
        construct_naive_adversary(Exponential(1.0), 10)


@pytest.mark.parametrize("n", [46, 100, 1000, 10_000])
@pytest.mark.parametrize("dist", [Exponential(1.0), HalfNormal(1.0), TwoPoint(20.0, 0.05)], ids=lambda d: d.kind)
def test_naive_adversary_is_small_noise(dist, n):
    cons = construct_naive_adversary(dist, n)
    c = (n - 6 * math.log(n)) / n
    assert classify(dist, n, c, cons.profile).small_noise


def test_linear_adversary_scaled_n10000():
    n = 10_000
    cons = construct_linear_adversary(Exponential(1.0), n, SCALED_LINEAR_OVERRIDES)
    p = cons.params
    assert p["small_count"] == 16
    assert p["large_count"] == 9983
    e16 = math.fsum(1 / i for i in range(1, 17))
    assert p["sigma_s"] == pytest.approx(SIGMA_S_COEF * e16 / math.sqrt(math.log(n)), rel=1e-12)
    alpha = alpha_quantile(MaxOf(Exponential(1.0), n - 16), 100.0)
    assert p["sigma_b"] == pytest.approx(6 * alpha * math.sqrt(math.log(n)), rel=1e-12)
    assert p["sigma_b"] > p["theta_star"] * p["sigma_s"]
    assert cons.profile.sigma[0] == 0 and np.all(np.diff(cons.profile.sigma) >= 0)
    assert cons.constants == "scaled"
    assert cons.to_config()["overrides"] == SCALED_LINEAR_OVERRIDES


@pytest.mark.parametrize("n", [10**3, 10**6])
def test_linear_adversary_default_constants(n):
    cons = construct_linear_adversary(Exponential(1.0), n)
    assert cons.params["small_count"] == 1
    assert cons.constants == "default"
    assert cons.params["sigma_b_exceeds_theta_sigma_s"]
    rep = classify(Exponential(1.0), n, 1 / 5626, cons.profile)
    assert rep.small_noise_mhr is True


def test_linear_adversary_preconditions():
    with pytest.raises(ConfigError):
        construct_linear_adversary(TwoPoint(2.0, 0.5), 100)
    with pytest.raises(ConfigError):
        construct_linear_adversary(Exponential(1.0), 2)
    with pytest.raises(ConfigError):
        construct_linear_adversary(Exponential(1.0), 10, {"c_s": 9})
    with pytest.raises(ConfigError):
        construct_linear_adversary(Exponential(1.0), 100, {"c_s": 3, "c_s_exponent": 0.3})
    with pytest.raises(ConfigError):
        construct_linear_adversary(Exponential(1.0), 100, {"sigma_big": 3})


def test_overrides_echoed():
    ov = {"c_b": 5.0, "sigma_b": 123.0}
    cons = build_construction("naive-adversary", Exponential(1.0), 100, ov)
    assert cons.to_dict()["overrides"] == ov
    assert cons.params["sigma_b"] == 123.0 and cons.params["large_count"] == 5
    with pytest.raises(ConfigError):
        build_construction("nope", Exponential(1.0), 100)


def test_classify_thresholds_by_hand():
    n, c = 100, 0.5
    dist = HalfNormal(1.0)
    prof = exact_prefix_profile(n, 50, 1e3)
    rep = classify(dist, n, c, prof)
    assert rep.pivot_linear == 50 and rep.pivot_power == 10
    e50 = order_stat_max_mean(dist, 50)
    e10 = order_stat_max_mean(dist, 10)
    ln = math.log(n)
    assert rep.threshold_small == pytest.approx(e50 / (5 * math.sqrt(2 * ln)))
    assert rep.threshold_small_mhr == pytest.approx(e10 / (18 * math.sqrt(2 * c * ln)))
    assert rep.threshold_medium == pytest.approx(e10 / (18 * c * math.sqrt(2 * ln)))
    assert rep.threshold_large == pytest.approx(e50 * math.sqrt(ln) / math.log(50))
    # sigma at both pivots is zero: small noise holds, medium and large do not
    assert rep.small_noise and rep.small_noise_mhr and not rep.medium_noise and not rep.large_noise


def test_classify_large_and_unclassifiable():
    n = 10_000
    dist = HalfNormal(1.0)
    prof = exact_prefix_profile(n, 3, 1e6)
    rep = classify(dist, n, 4 / n, prof)
    assert rep.large_noise is True
    rep = classify(dist, n, 2 / n, prof)
    assert rep.large_noise is None and rep.notes


def test_non_mhr_skips_mhr_regime():
    prof = NoiseProfile.from_values(np.zeros(50))
    rep = classify(TwoPoint(10.0, 0.1), 50, 0.5, prof)
    assert rep.small_noise_mhr is None and not rep.mhr


def test_classify_rejects_bad_inputs():
    prof = NoiseProfile.from_values(np.zeros(10))
    with pytest.raises(ConfigError):
        classify(Uniform(0, 1), 10, 0.0, prof)
    with pytest.raises(ConfigError):
        classify(Uniform(0, 1), 11, 0.5, prof)
