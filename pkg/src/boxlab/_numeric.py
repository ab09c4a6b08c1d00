"""Small numerical helpers: adaptive quadrature wrapper and Gaussian tails."""
from __future__ import annotations

import math
import warnings
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from .errors import NumericalError

SQRT_2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def normal_cdf(x):
    """Standard normal CDF (erfc based, accurate in both tails)."""
    return special.ndtr(x)


def normal_logcdf(x):
    return special.log_ndtr(x)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def normal_logpdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI


def mills_ratio(z):
    """phi(z) / (1 - Phi(z)), stable for large positive z."""
    z = np.asarray(z, dtype=float)
    return np.exp(normal_logpdf(z) - special.log_ndtr(-z))


def quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] = (),
    epsabs: float = 0.0,
    epsrel: float = 1e-11,
    limit: int = 500,
) -> float:
    """Adaptive Gauss-Kronrod integral of ``func`` over ``[a, b]``.

    ``b`` may be ``inf``. Interior ``points`` are used as breakpoints; the
    interval is split at them so infinite upper limits are also supported.
    Raises NumericalError on non-finite results or a poor error estimate.
    """
    if not a < b:
        return 0.0
    cuts = sorted({float(p) for p in points if a < p < b and math.isfinite(p)})
    edges = [a, *cuts, b]
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, est = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += val
        err += est
    if not math.isfinite(total):
        raise NumericalError(f"integral over [{a}, {b}] is not finite")
    if err > max(1e-6 * abs(total), 1e-10, 10 * epsabs):
        raise NumericalError(
            f"integral over [{a}, {b}] did not converge (value {total:.6g}, error {err:.3g})"
        )
    return total


def round_half_up(x: float) -> int:
    """Nearest integer with halves rounded up (unlike Python's banker's round)."""
    return int(math.floor(x + 0.5))
