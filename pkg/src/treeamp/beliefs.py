"""Scalar belief kernels: closed-form log-partitions, means and variances.

Each kernel evaluates, componentwise over ``b``, the log-partition A of a
tilted base measure together with its first two b-derivatives (posterior
mean r and variance v).  These are the primitives every factor module is
built from.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, i0e, i1e, log_ndtr, ndtr

from .errors import EmptyInterval, NonPositivePrecision

# Precision below this is treated as non-positive; bounds variance blow-up.
A_MIN = 1e-11

LOG_2PI = np.log(2.0 * np.pi)
_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


@dataclass
class ScalarMoments:
    """Componentwise log-partition A, posterior mean r and variance v.

    ``rho`` is the posterior non-zero fraction, populated by the sparse
    kernel only.
    """

    A: np.ndarray
    r: np.ndarray
    v: np.ndarray
    rho: np.ndarray | None = None


def check_precision(a, where=""):
    if not np.all(np.isfinite(a)) or np.any(np.asarray(a) <= A_MIN):
        raise NonPositivePrecision(f"precision must exceed {A_MIN:g}{where}: got {a}")


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def log_norm_pdf(z):
    return -0.5 * z * z - 0.5 * LOG_2PI


def logsubexp(la, lb):
    """log(exp(la) - exp(lb)) for la > lb, elementwise."""
    la, lb = np.broadcast_arrays(np.asarray(la, float), np.asarray(lb, float))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = la + np.log1p(-np.exp(np.minimum(lb - la, 0.0)))
    # lb == -inf: plain la
    out = np.where(np.isneginf(lb), la, out)
    return out


def real_belief(a, b):
    """Gaussian kernel on the real line."""
    check_precision(a)
    b = np.asarray(b, dtype=float)
    A = b * b / (2.0 * a) + 0.5 * (LOG_2PI - np.log(a))
    r = b / a
    v = np.broadcast_to(np.asarray(1.0 / a), b.shape).copy() if b.ndim else np.asarray(1.0 / a)
    return ScalarMoments(A=A, r=r, v=v)


def complex_real_belief(a, b):
    """Isotropic Gaussian kernel on the complex plane (two real dims).

    A is the full two-dimensional log-partition; v is per real dimension.
    """
    check_precision(a)
    b = np.asarray(b, dtype=complex)
    absb2 = (b * b.conj()).real
    A = absb2 / (2.0 * a) + (LOG_2PI - np.log(a))
    r = b / a
    v = np.broadcast_to(np.asarray(1.0 / a), b.shape).copy() if b.ndim else np.asarray(1.0 / a)
    return ScalarMoments(A=A, r=r, v=v.real if np.ndim(v) else v)


def binary_belief(b):
    """Two-atom kernel on {-1, +1}; overflow-free for |b| up to ~1e300."""
    b = np.asarray(b, dtype=float)
    absb = np.abs(b)
    A = absb + np.log1p(np.exp(-2.0 * absb))
    r = np.tanh(b)
    # sech^2 via exponentials of non-positive argument only
    e = np.exp(-2.0 * absb)
    v = 4.0 * e / (1.0 + e) ** 2
    return ScalarMoments(A=A, r=r, v=v)


def sparse_belief(a, b, eta):
    """Gauss-Bernoulli kernel: point mass at zero plus a Gaussian slab."""
    check_precision(a)
    b = np.asarray(b, dtype=float)
    gauss = real_belief(a, b)
    xi = gauss.A - eta
    rho = sigmoid(xi)
    A = eta + softplus(xi)
    r = gauss.r * rho
    v = gauss.v * rho + gauss.r**2 * rho * (1.0 - rho)
    return ScalarMoments(A=A, r=r, v=v, rho=rho)


def complex_sparse_belief(a, b, eta):
    """Gauss-Bernoulli kernel on the complex plane; v per real dimension."""
    check_precision(a)
    b = np.asarray(b, dtype=complex)
    gauss = complex_real_belief(a, b)
    xi = gauss.A - eta
    rho = sigmoid(xi)
    A = eta + softplus(xi)
    r = gauss.r * rho
    absr2 = (gauss.r * gauss.r.conj()).real
    v = gauss.v * rho + 0.5 * absr2 * rho * (1.0 - rho)
    return ScalarMoments(A=A, r=r, v=v, rho=rho)


def _halfline_std(z0):
    """Mean h and variance w of a standard Normal truncated to [z0, inf).

    Uses the scaled complementary error function so that deep tails
    (z0 >> 1) keep full relative accuracy.
    """
    z0 = np.asarray(z0, dtype=float)
    h = _SQRT_2_OVER_PI / erfcx(z0 / _SQRT2)
    w = 1.0 - h * (h - z0)
    return h, w


def positive_belief(a, b, sign=+1):
    """Gaussian kernel truncated to the half-line sign*x >= 0."""
    check_precision(a)
    b = np.asarray(b, dtype=float)
    sqa = np.sqrt(a)
    z0 = -sign * b / sqa
    h, w = _halfline_std(z0)
    A = real_belief(a, b).A + log_ndtr(-z0)
    r = sign * (b * sign / a + h / sqa)
    v = w / a
    return ScalarMoments(A=A, r=r, v=v)


def interval_belief(a, b, x_min, x_max):
    """Gaussian kernel truncated to [x_min, x_max]; bounds may be infinite."""
    check_precision(a)
    if not x_min < x_max:
        raise EmptyInterval(f"need x_min < x_max, got [{x_min}, {x_max}]")
    b = np.asarray(b, dtype=float)
    lo_inf = np.isneginf(x_min)
    hi_inf = np.isposinf(x_max)
    if lo_inf and hi_inf:
        return real_belief(a, b)
    if hi_inf:
        return _halfline_belief(a, b, x_min, +1)
    if lo_inf:
        return _halfline_belief(a, b, x_max, -1)
    return _twosided_belief(a, b, x_min, x_max)


def _halfline_belief(a, b, cut, direction):
    """Truncation to [cut, inf) for direction=+1, (-inf, cut] for -1."""
    if direction < 0:
        m = _halfline_belief(a, -b, -cut, +1)
        return ScalarMoments(A=m.A, r=-m.r, v=m.v)
    sqa = np.sqrt(a)
    z0 = (a * cut - b) / sqa
    h, w = _halfline_std(z0)
    A = real_belief(a, b).A + log_ndtr(-z0)
    r = b / a + h / sqa
    v = w / a
    return ScalarMoments(A=A, r=r, v=v)


def _twosided_belief(a, b, x_min, x_max):
    sqa = np.sqrt(a)
    zl = (a * x_min - b) / sqa
    zu = (a * x_max - b) / sqa
    # log of the interval mass, branch chosen to avoid cancellation
    log_mass = np.where(
        zl > 0,
        logsubexp(log_ndtr(-zl), log_ndtr(-zu)),
        np.where(
            zu < 0,
            logsubexp(log_ndtr(zu), log_ndtr(zl)),
            np.log(np.maximum(ndtr(zu) - ndtr(zl), 1e-300)),
        ),
    )
    # very narrow intervals: two-point Gaussian mass approximation
    width = zu - zl
    narrow = width < 1e-7 * (np.abs(zl) + np.abs(zu) + 1.0)
    if np.any(narrow):
        zm = 0.5 * (zl + zu)
        log_mass = np.where(narrow, np.log(width) + log_norm_pdf(zm), log_mass)
    pl = np.exp(log_norm_pdf(zl) - log_mass)
    pu = np.exp(log_norm_pdf(zu) - log_mass)
    A = real_belief(a, b).A + log_mass
    r = b / a - (pu - pl) / sqa
    v = (1.0 - (zu * pu - zl * pl) - (pu - pl) ** 2) / a
    return ScalarMoments(A=A, r=r, v=np.maximum(v, 0.0))


def phase_belief(b):
    """Kernel on the unit circle (direction statistics); v per real dim."""
    b = np.asarray(b, dtype=complex)
    absb = np.abs(b)
    A = LOG_2PI + absb + np.log(i0e(absb))
    ratio = np.where(absb > 0, i1e(absb) / i0e(absb), 0.0)
    unit = np.where(absb > 0, b / np.where(absb > 0, absb, 1.0), 0.0)
    r = unit * ratio
    v = 0.5 * (1.0 - ratio**2)
    return ScalarMoments(A=A, r=r, v=v)
