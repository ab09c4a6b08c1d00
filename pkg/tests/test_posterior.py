import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.distributions import Exponential, HalfNormal, PointMass, Tabulated, TwoPoint, Uniform
from boxlab.errors import ConfigError, DegeneratePosteriorError
from boxlab.posterior import (
    PosteriorEngine,
    PosteriorQuery,
    posterior_mean,
    posterior_mean_exponential,
    posterior_mean_halfnormal,
    posterior_mean_or_fallback,
    posterior_upper_bound_halfnormal,
    truncated_posterior_mean,
)


def mp_posterior(logprior, lo, hi, sigma, y):
    """Independent oracle: ratio of mpmath integrals of x^k prior(x) phi((y-x)/sigma)."""
    mp.mp.dps = 30
    w = lambda x: mp.exp(logprior(x) - (y - x) ** 2 / (2 * sigma**2))
    pts = sorted({lo, max(lo, min(hi, y)), hi})
    num = mp.quad(lambda x: x * w(x), pts)
    den = mp.quad(w, pts)
    return float(num / den)


ORACLE = [
    # (prior, sigma, y, value) frozen from mpmath
    ("halfnormal", 1.0, 0.0, 0.5641895835477563),
    ("halfnormal", 0.1, 1.0, 0.99009900990099),
    ("halfnormal", 2.0, -3.0, 0.5344239779940306),
    ("exponential", 1.0, 2.0, 1.287599970939178),
]


@pytest.mark.parametrize("prior,sigma,y,value", ORACLE)
def test_closed_forms_match_frozen_oracle(prior, sigma, y, value):
    if prior == "halfnormal":
        closed, dist = posterior_mean_halfnormal(sigma, y), HalfNormal(1.0)
    else:
        closed, dist = posterior_mean_exponential(sigma, y), Exponential(1.0)
    assert closed == pytest.approx(value, rel=1e-10)
    assert posterior_mean(dist, sigma, y) == pytest.approx(value, rel=1e-8)


def test_frozen_oracle_recomputes():
    hn = mp_posterior(lambda x: -x * x / 2, 0, mp.inf, 2.0, -3.0)
    assert hn == pytest.approx(0.5344239779940306, rel=1e-12)
    ex = mp_posterior(lambda x: -x, 0, mp.inf, 1.0, 2.0)
    assert ex == pytest.approx(1.287599970939178, rel=1e-12)


def test_uniform_small_noise_interior():
    assert posterior_mean(Uniform(0.0, 1.0), 0.01, 0.7) == pytest.approx(0.7, abs=1e-10)


def test_uniform_against_mpmath():
    val = mp_posterior(lambda x: 0, 0.0, 1.0, 0.5, 1.4)
    assert posterior_mean(Uniform(0.0, 1.0), 0.5, 1.4) == pytest.approx(val, rel=1e-8)


def test_truncated_posterior_oracle():
    v = truncated_posterior_mean(Exponential(1.0), 1.0, 3.0, 0.0)
    assert v == pytest.approx(0.4139371809928315, rel=1e-8)
    assert v <= 0.8360465862613472  # 2 E[Z]


@settings(max_examples=60, deadline=None)
@given(sigma=st.floats(0.05, 20.0), y=st.floats(-30.0, 30.0))
def test_halfnormal_closed_form_vs_quadrature(sigma, y):
    assert posterior_mean_halfnormal(sigma, y) == pytest.approx(
        posterior_mean(HalfNormal(1.0), sigma, y), abs=1e-6
    )


@settings(max_examples=60, deadline=None)
@given(sigma=st.floats(0.05, 20.0), y=st.floats(-30.0, 30.0))
def test_exponential_closed_form_vs_quadrature(sigma, y):
    assert posterior_mean_exponential(sigma, y) == pytest.approx(
        posterior_mean(Exponential(1.0), sigma, y), abs=1e-6
    )


@settings(max_examples=100, deadline=None)
@given(sigma=st.floats(1e-3, 1e3), y=st.floats(-1e3, 1e3))
def test_halfnormal_upper_bound(sigma, y):
    assert posterior_mean_halfnormal(sigma, y) <= posterior_upper_bound_halfnormal(sigma, y) + 1e-12


@pytest.mark.parametrize("dist", [Exponential(1.0), HalfNormal(1.0), Uniform(0.0, 2.0), TwoPoint(5.0, 0.3)],
                         ids=lambda d: d.kind)
@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_monotone_in_y(dist, sigma):
    ys = np.linspace(-10, 10, 121)
    vals = np.array([posterior_mean(dist, sigma, y) for y in ys])
    assert np.all(np.diff(vals) >= -1e-7 * max(1.0, np.abs(vals).max()))
    lo, hi = dist.support()
    assert np.all((vals >= lo) & (vals <= hi))


def test_atomic_posterior_exact():
    d = TwoPoint(4.0, 0.25)
    sigma, y = 1.5, 2.5
    w0 = 0.75 * math.exp(-(y**2) / (2 * sigma**2))
    w1 = 0.25 * math.exp(-((y - 4) ** 2) / (2 * sigma**2))
    assert posterior_mean(d, sigma, y) == pytest.approx(4 * w1 / (w0 + w1), rel=1e-12)
    eng = PosteriorEngine(d)
    assert eng(np.array([sigma]), np.array([y]))[0] == pytest.approx(4 * w1 / (w0 + w1), rel=1e-12)


def test_zero_noise_and_errors():
    assert posterior_mean(Exponential(1.0), 0.0, 2.0) == 2.0
    assert posterior_mean(PointMass(3.0), 1.0, 100.0) == 3.0
    with pytest.raises(ConfigError):
        posterior_mean(Exponential(1.0), 0.0, -1.0)
    with pytest.raises(ConfigError):
        posterior_mean(Exponential(1.0), -1.0, 1.0)
    with pytest.raises(ConfigError):
        posterior_mean(Exponential(1.0), 1.0, math.nan)


def test_degenerate_query_falls_back():
    d = Uniform(0.0, 1.0)
    with pytest.raises(DegeneratePosteriorError):
        posterior_mean(d, 1e-3, 1e6)
    val, fell_back = posterior_mean_or_fallback(d, 1e-3, 1e6)
    assert fell_back and val == 1.0


def test_far_tail_observation_is_accurate():
    # posterior ~ y - sigma^2 far above zero for the exponential prior
    assert posterior_mean(Exponential(1.0), 1.0, 60.0) == pytest.approx(59.0, rel=1e-9)


def test_engine_matches_scalar_and_memo():
    x = np.linspace(0, 8, 200)
    tab = Tabulated(x, np.concatenate([1 - np.exp(-x[:-1]), [1.0]]))
    eng = PosteriorEngine(tab)
    sig = np.array([0.0, 0.5, 0.5, 2.0])
    y = np.array([1.0, 1.2, 1.2, -0.5])
    out = eng(sig, y)
    assert out[0] == 1.0
    assert out[1] == out[2]
    assert out[3] == pytest.approx(posterior_mean(tab, 2.0, -0.5), rel=1e-7)
    assert len(eng._cache) == 2
    hn = PosteriorEngine(HalfNormal(2.0))
    assert hn(np.array([1.0]), np.array([0.3]))[0] == pytest.approx(posterior_mean(HalfNormal(2.0), 1.0, 0.3), abs=1e-7)


def test_query_object():
    q = PosteriorQuery(HalfNormal(1.0), 1.0, 0.0)
    assert q.evaluate() == pytest.approx(0.5641895835477563, rel=1e-8)
