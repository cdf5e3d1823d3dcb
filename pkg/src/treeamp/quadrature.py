"""Quadrature rules for the ensemble averages in state evolution.

Continuous teacher components are integrated with Gauss-Hermite (Gaussian
weight over the whole line) or Gauss-Legendre restricted to an effective
support (truncated Gaussian weight).  Discrete atoms are summed exactly.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm, roots_legendre

from .beliefs import LOG_2PI
from .errors import QuadratureFailure

DEFAULT_ORDER = 95
# half-width of the effective Gaussian support, in standard deviations
GAUSS_SUPPORT = 9.0


@lru_cache(maxsize=64)
def gauss_hermite(n=DEFAULT_ORDER):
    """Nodes/weights for E_{xi ~ N(0,1)} f(xi); weights sum to 1."""
    x, w = roots_hermitenorm(n)
    w = w / w.sum()
    return x, w


@lru_cache(maxsize=64)
def _legendre(n):
    return roots_legendre(n)


def gauss_interval(lo, hi, n=DEFAULT_ORDER):
    """Plain Gauss-Legendre nodes/weights on [lo, hi]."""
    x, w = _legendre(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def truncnorm_nodes(mean, var, lo, hi, n=DEFAULT_ORDER):
    """Nodes/weights approximating E over N(mean, var) truncated to [lo, hi].

    Weights are renormalised to sum to one, so E[1] = 1 holds exactly.
    Returns (None, None) when the interval carries no mass within the
    effective support.
    """
    sd = np.sqrt(var)
    a = max(lo, mean - GAUSS_SUPPORT * sd)
    b = min(hi, mean + GAUSS_SUPPORT * sd)
    if not a < b:
        return None, None
    x, w = gauss_interval(a, b, n)
    logw = np.log(w) - 0.5 * (x - mean) ** 2 / var - 0.5 * (LOG_2PI + np.log(var))
    logw -= logw.max()
    w = np.exp(logw)
    s = w.sum()
    if s <= 0:
        return None, None
    return x, w / s


def check_estimates(coarse, fine, tol=1e-8, what="quadrature"):
    """Raise QuadratureFailure when two quadrature orders disagree.

    The tolerance is relative to the magnitude of the estimate: integrals
    scale with the SE hat-parameters (informed initialisations reach 1e8)
    so an absolute criterion would trip on floating-point granularity.
    """
    coarse = np.atleast_1d(np.asarray(coarse, dtype=float))
    fine = np.atleast_1d(np.asarray(fine, dtype=float))
    err = np.abs(coarse - fine)
    scale = 1.0 + np.abs(fine)
    if np.any(err > tol * scale):
        worst = float(np.max(err / scale))
        raise QuadratureFailure(f"{what}: error estimate {worst:.3e} exceeds {tol:g}")


def rayleigh_nodes(tau, n=DEFAULT_ORDER):
    """Nodes/weights for E over the radius s of a circular Gaussian.

    s = |z| with Re z, Im z ~ N(0, tau); density (s/tau) exp(-s^2 / 2 tau).
    Weights normalised to sum to one.
    """
    hi = GAUSS_SUPPORT * np.sqrt(tau)
    s, w = gauss_interval(0.0, hi, n)
    w = w * (s / tau) * np.exp(-0.5 * s**2 / tau)
    return s, w / w.sum()
