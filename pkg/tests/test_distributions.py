import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.distributions import (
    Exponential,
    HalfNormal,
    MaxOf,
    PointMass,
    Tabulated,
    Truncated,
    TwoPoint,
    Uniform,
    from_config,
)
from boxlab.errors import ConfigError

CONTINUOUS = [Exponential(1.0), Exponential(2.5), HalfNormal(1.0), HalfNormal(0.3), Uniform(0.5, 2.0)]


@pytest.mark.parametrize("dist", CONTINUOUS, ids=lambda d: repr(d))
@settings(max_examples=50, deadline=None)
@given(p=st.floats(1e-9, 1 - 1e-9))
def test_quantile_inverts_cdf(dist, p):
    x = dist.quantile(p)
    assert dist.cdf(x) == pytest.approx(p, rel=1e-9, abs=1e-12)
    assert dist.isf(1 - p) == pytest.approx(x, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("dist", CONTINUOUS, ids=lambda d: repr(d))
def test_cdf_plus_sf_is_one_and_pdf_integrates(dist):
    xs = np.linspace(0, dist.quantile(1 - 1e-12), 2001)
    assert np.allclose(dist.cdf(xs) + dist.sf(xs), 1.0)
    lo, hi = dist.support()
    grid = np.linspace(lo, min(hi, dist.quantile(1 - 1e-14)), 200_001)
    assert np.trapezoid(dist.pdf(grid), grid) == pytest.approx(1.0, abs=1e-6)


def test_means_against_mpmath():
    assert HalfNormal(1.0).mean() == pytest.approx(float(mp.sqrt(2 / mp.pi)), rel=1e-14)
    assert Exponential(4.0).mean() == pytest.approx(0.25)
    assert Uniform(1.0, 3.0).mean() == pytest.approx(2.0)
    assert TwoPoint(1000.0, 1e-3).mean() == pytest.approx(1.0)
    assert PointMass(2.5).mean() == 2.5


def test_halfnormal_logsf_deep_tail():
    # log of 2 * (1 - Phi(40)) from mpmath
    expected = float(mp.log(mp.erfc(40 / mp.sqrt(2))))
    assert HalfNormal(1.0).logsf(40.0) == pytest.approx(expected, rel=1e-12)


def test_atoms_and_continuous_mass():
    d = TwoPoint(10.0, 0.2)
    locs, probs = d.atoms()
    assert sorted(zip(locs.tolist(), probs.tolist())) == [(0.0, pytest.approx(0.8)), (10.0, pytest.approx(0.2))]
    assert d.continuous_mass() == pytest.approx(0.0)
    assert Exponential().continuous_mass() == 1.0


def test_mhr_verdicts():
    assert Exponential().is_mhr()
    assert HalfNormal().is_mhr()
    assert Uniform(0, 1).is_mhr()
    assert not TwoPoint(5.0, 0.1).is_mhr()
    assert not PointMass(1.0).is_mhr()
    # Lomax (Pareto II) has a decreasing hazard rate
    x = np.linspace(0, 50, 400)
    lomax = Tabulated(x, np.concatenate([1 - (1 + x[:-1]) ** -2.0, [1.0]]))
    assert not lomax.is_mhr()
    # tabulated exponential keeps its verdict
    x = np.linspace(0, 30, 300)
    tab = Tabulated(x, np.concatenate([1 - np.exp(-x[:-1]), [1.0]]))
    assert tab.is_mhr()


def test_max_of_is_power_of_cdf():
    base = HalfNormal(1.0)
    m = MaxOf(base, 7)
    xs = np.linspace(0, 5, 50)
    assert np.allclose(m.cdf(xs), base.cdf(xs) ** 7)
    assert m.quantile(0.5) == pytest.approx(base.quantile(0.5 ** (1 / 7)))
    assert m.is_mhr()


def test_truncated_mean():
    t = Truncated(Exponential(1.0), 1.0)
    # E[X | X <= 1] = 1 - 1/(e - 1)
    assert t.mean() == pytest.approx(1 - 1 / (math.e - 1), rel=1e-10)
    assert t.cdf(1.0) == pytest.approx(1.0)


def test_sampling_matches_mean(rng):
    for d in (Exponential(2.0), HalfNormal(1.0), Uniform(0, 4), TwoPoint(10.0, 0.3)):
        s = d.sample(rng, 200_000)
        assert np.all(s >= 0)
        assert abs(s.mean() - d.mean()) < 5 * s.std() / math.sqrt(s.size)


@pytest.mark.parametrize("dist", [
    Exponential(2.0), HalfNormal(0.5), Uniform(0.0, 1.0), PointMass(3.0), TwoPoint(4.0, 0.25),
    MaxOf(Exponential(1.0), 5), Truncated(HalfNormal(1.0), 2.0),
    Tabulated(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 1.0])),
], ids=lambda d: d.kind)
def test_config_round_trip(dist):
    again = from_config(dist.to_config())
    assert again.to_config() == dist.to_config()
    assert again.mean() == pytest.approx(dist.mean())


def test_from_config_fails_closed():
    assert from_config("halfnormal") == HalfNormal(1.0)
    with pytest.raises(ConfigError):
        from_config({"kind": "exponential", "rte": 1.0})
    with pytest.raises(ConfigError):
        from_config({"kind": "cauchy"})
    with pytest.raises(ConfigError):
        from_config({"rate": 1.0})
    with pytest.raises(ConfigError):
        Exponential(-1.0)
    with pytest.raises(ConfigError):
        TwoPoint(1.0, 0.0)
    with pytest.raises(ConfigError):
        Tabulated(np.array([0.0, 1.0]), np.array([0.0, 0.9]))
