"""Separable two-variable channels: additive Gaussian noise and piecewise
linear activations (relu, leaky relu, hard tanh, abs, sgn).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import beliefs
from .beliefs import LOG_2PI
from .errors import NonPositivePrecision, ShapeMismatch
from .quadrature import (
    DEFAULT_ORDER,
    check_estimates,
    gauss_hermite,
    truncnorm_nodes,
)


@dataclass
class ChannelMoments:
    A: np.ndarray
    r_z: np.ndarray
    v_z: np.ndarray
    r_x: np.ndarray
    v_x: np.ndarray


def _channel_average(components, hats, kernel, order):
    """Average scalar channel quantities over the teacher ensemble.

    ``components`` yield (weight, z0, x0, node weights); messages are
    b_z = mz z0 + sqrt(qz) xi_z and b_x = mx x0 + sqrt(qx) xi_x.
    Returns (Abar, m_z, q_z, v_z, m_x, q_x, v_x).
    """
    (m_hat_z, q_hat_z), (m_hat_x, q_hat_x) = hats
    xi, wxi = gauss_hermite(order)
    sqz = math.sqrt(q_hat_z) if q_hat_z > 0 else 0.0
    sqx = math.sqrt(q_hat_x) if q_hat_x > 0 else 0.0
    acc = np.zeros(7)
    for w, z0, x0, w0 in components:
        nodes_z = xi if sqz > 0 else np.zeros(1)
        wts_z = wxi if sqz > 0 else np.ones(1)
        nodes_x = xi if sqx > 0 else np.zeros(1)
        wts_x = wxi if sqx > 0 else np.ones(1)
        bz = m_hat_z * z0[:, None, None] + sqz * nodes_z[None, :, None]
        bx = m_hat_x * x0[:, None, None] + sqx * nodes_x[None, None, :]
        bz, bx = np.broadcast_arrays(bz, bx)
        wgt = w0[:, None, None] * wts_z[None, :, None] * wts_x[None, None, :]
        z0b = np.broadcast_to(z0[:, None, None], bz.shape)
        x0b = np.broadcast_to(x0[:, None, None], bz.shape)
        mom = kernel(bz.ravel(), bx.ravel())
        A = np.reshape(mom.A, bz.shape)
        r_z = np.reshape(mom.r_z, bz.shape)
        v_z = np.reshape(mom.v_z, bz.shape)
        r_x = np.reshape(mom.r_x, bz.shape)
        v_x = np.reshape(mom.v_x, bz.shape)
        acc[0] += w * np.sum(wgt * A)
        acc[1] += w * np.sum(wgt * z0b * r_z)
        acc[2] += w * np.sum(wgt * r_z**2)
        acc[3] += w * np.sum(wgt * v_z)
        acc[4] += w * np.sum(wgt * x0b * r_x)
        acc[5] += w * np.sum(wgt * r_x**2)
        acc[6] += w * np.sum(wgt * v_x)
    return acc


class SeparableChannelBase:
    """Two-leg factor p(x | z) applied componentwise."""

    se_order = DEFAULT_ORDER

    def scalar_posterior(self, a_z, b_z, a_x, b_x) -> ChannelMoments:
        raise NotImplementedError

    def posterior(self, a_z, b_z, a_x, b_x):
        b_z, b_x = np.asarray(b_z), np.asarray(b_x)
        if b_z.shape != b_x.shape:
            raise ShapeMismatch("separable channel legs must share a shape")
        mom = self.scalar_posterior(a_z, b_z, a_x, b_x)
        return (
            float(np.sum(mom.A)),
            mom.r_z,
            float(np.mean(mom.v_z)),
            mom.r_x,
            float(np.mean(mom.v_x)),
        )

    # -- teacher ----------------------------------------------------------

    def teacher_A0(self, tau_hat_z, tau_hat_x):
        mom = self.scalar_posterior(tau_hat_z, np.zeros(1), tau_hat_x, np.zeros(1))
        return float(mom.A[0])

    def teacher_tau(self, tau_hat_z, tau_hat_x):
        mom = self.scalar_posterior(tau_hat_z, np.zeros(1), tau_hat_x, np.zeros(1))
        tau_z = float(mom.v_z[0] + mom.r_z[0] ** 2)
        tau_x = float(mom.v_x[0] + mom.r_x[0] ** 2)
        return tau_z, tau_x

    def teacher_components(self, tau_hat_z, tau_hat_x, order):
        """(weight, z0 nodes, x0 nodes, node weights) of the tilted teacher."""
        raise NotImplementedError

    # -- state evolution ----------------------------------------------------

    def rs_quantities(self, hats_z, hats_x, tau_hat0_z, tau_hat0_x,
                      teacher=None, order=None, check=True):
        """hats_* are (m_hat, q_hat, tau_hat) triples for each leg."""
        teacher = teacher if teacher is not None else self
        order = order if order is not None else self.se_order
        a_z = hats_z[2] + hats_z[1]
        a_x = hats_x[2] + hats_x[1]
        kernel = lambda bz, bx: self.scalar_posterior(a_z, bz, a_x, bx)
        pair = ((hats_z[0], hats_z[1]), (hats_x[0], hats_x[1]))

        def run(n):
            comps = teacher.teacher_components(tau_hat0_z, tau_hat0_x, n)
            return _channel_average(comps, pair, kernel, n)

        vals = run(order)
        if check:
            check_estimates(vals, run(order + 24), tol=1e-7,
                            what="channel RS potential")
        A, m_z, q_z, v_z, m_x, q_x, v_x = vals
        return {
            "A": A,
            "z": {"m": m_z, "q": q_z, "v": v_z, "tau": q_z + v_z},
            "x": {"m": m_x, "q": q_x, "v": v_x, "tau": q_x + v_x},
        }

    def bo_quantities(self, m_hat_z, m_hat_x, tau_hat0_z, tau_hat0_x,
                      order=None, check=True):
        out = self.rs_quantities(
            (m_hat_z, m_hat_z, tau_hat0_z),
            (m_hat_x, m_hat_x, tau_hat0_x),
            tau_hat0_z,
            tau_hat0_x,
            order=order,
            check=check,
        )
        tau_z, tau_x = self.teacher_tau(tau_hat0_z, tau_hat0_x)
        return {
            "A": out["A"],
            "z": {"m": tau_z - out["z"]["v"], "v": out["z"]["v"]},
            "x": {"m": tau_x - out["x"]["v"], "v": out["x"]["v"]},
        }

    def mutual_information(self, m_hat_z, m_hat_x, tau_hat0_z, tau_hat0_x,
                           order=None):
        tau_z, tau_x = self.teacher_tau(tau_hat0_z, tau_hat0_x)
        bo = self.bo_quantities(m_hat_z, m_hat_x, tau_hat0_z, tau_hat0_x, order=order)
        return (
            0.5 * (m_hat_z * tau_z + m_hat_x * tau_x)
            - bo["A"]
            + self.teacher_A0(tau_hat0_z, tau_hat0_x)
        )


@dataclass
class GaussianNoiseChannel(SeparableChannelBase):
    var: float = 1.0

    # the channel is conjugate: every SE integrand is polynomial in the
    # Gaussian variables, so a small exact rule suffices
    se_order = 11

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError("var must be positive")
        self.a_noise = 1.0 / self.var

    def scalar_posterior(self, a_z, b_z, a_x, b_x):
        an = self.a_noise
        a = a_x + a_z + a_x * a_z / an
        if a <= 0 or an + a_z <= 0 or an + a_x <= 0:
            raise NonPositivePrecision(f"noise channel precision {a} <= 0")
        b_z, b_x = np.asarray(b_z, dtype=float), np.asarray(b_x, dtype=float)
        v_z = (an + a_x) / (an * a)
        v_x = (an + a_z) / (an * a)
        r_z = v_z * (b_z + an * b_x / (an + a_x))
        r_x = v_x * (b_x + an * b_z / (an + a_z))
        det = an * a
        quad = (an + a_x) * b_z**2 + 2 * an * b_z * b_x + (an + a_z) * b_x**2
        A = quad / (2 * det) + 0.5 * (LOG_2PI - np.log(a))
        shape = b_z.shape
        return ChannelMoments(
            A=A,
            r_z=r_z,
            v_z=np.broadcast_to(np.asarray(v_z), shape).copy(),
            r_x=r_x,
            v_x=np.broadcast_to(np.asarray(v_x), shape).copy(),
        )

    def messages(self, a_z, b_z, a_x, b_x):
        """Forward (to x) and backward (to z) message natural parameters."""
        an = self.a_noise
        fwd = (an * a_z / (an + a_z), an * np.asarray(b_z) / (an + a_z))
        bwd = (an * a_x / (an + a_x), an * np.asarray(b_x) / (an + a_x))
        return fwd, bwd

    def teacher_components(self, tau_hat_z, tau_hat_x, order):
        # jointly Gaussian teacher: 2D Gauss-Hermite on the Cholesky frame
        an = self.a_noise
        prec = np.array([[tau_hat_z + an, -an], [-an, tau_hat_x + an]])
        cov = np.linalg.inv(prec)
        L = np.linalg.cholesky(cov)
        xi, wxi = gauss_hermite(order)
        g1 = np.repeat(xi, order)
        g2 = np.tile(xi, order)
        w = np.repeat(wxi, order) * np.tile(wxi, order)
        z0 = L[0, 0] * g1
        x0 = L[1, 0] * g1 + L[1, 1] * g2
        return [(1.0, z0, x0, w)]

    def sample(self, rng, z):
        return np.asarray(z) + rng.normal(0.0, math.sqrt(self.var), size=np.shape(z))


@dataclass(frozen=True)
class Region:
    lo: float
    hi: float
    intercept: float
    slope: float


@dataclass
class PiecewiseLinearChannel(SeparableChannelBase):
    regions: tuple = field(default_factory=tuple)
    name: str = "piecewise"

    def __post_init__(self):
        regs = sorted(self.regions, key=lambda r: r.lo)
        if not regs:
            raise ValueError("need at least one region")
        if not np.isneginf(regs[0].lo) or not np.isposinf(regs[-1].hi):
            raise ValueError("regions must cover the real line")
        for left, right in zip(regs, regs[1:]):
            if left.hi != right.lo:
                raise ValueError("regions must be contiguous and disjoint")
        self.regions = tuple(regs)

    def apply(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for reg in self.regions:
            mask = (z >= reg.lo) & (z < reg.hi)
            out[mask] = reg.intercept + reg.slope * z[mask]
        return out

    def _region_moments(self, a_z, b_z, a_x, b_x):
        """Per-region log-partitions and conditional moments."""
        out = []
        for reg in self.regions:
            a_i = a_z + reg.slope**2 * a_x
            if a_i <= 0:
                raise NonPositivePrecision(
                    f"region precision {a_i} <= 0 (a_z={a_z}, a_x={a_x})"
                )
            b_i = b_z + reg.slope * (b_x - a_x * reg.intercept)
            mom = beliefs.interval_belief(a_i, b_i, reg.lo, reg.hi)
            A_i = -0.5 * a_x * reg.intercept**2 + b_x * reg.intercept + mom.A
            r_z = mom.r
            r_x = reg.intercept + reg.slope * mom.r
            v_z = mom.v
            v_x = reg.slope**2 * mom.v
            out.append((A_i, r_z, v_z, r_x, v_x))
        return out

    def scalar_posterior(self, a_z, b_z, a_x, b_x):
        b_z, b_x = np.broadcast_arrays(
            np.asarray(b_z, dtype=float), np.asarray(b_x, dtype=float)
        )
        parts = self._region_moments(a_z, b_z, a_x, b_x)
        logA = np.stack([p[0] for p in parts])
        Amax = logA.max(axis=0)
        w = np.exp(logA - Amax)
        norm = w.sum(axis=0)
        p = w / norm
        A = Amax + np.log(norm)
        r_z = sum(p[i] * parts[i][1] for i in range(len(parts)))
        r_x = sum(p[i] * parts[i][3] for i in range(len(parts)))
        # total variance: mean within-region + between-region spread
        v_z = sum(p[i] * (parts[i][2] + parts[i][1] ** 2) for i in range(len(parts)))
        v_z = v_z - r_z**2
        v_x = sum(p[i] * (parts[i][4] + parts[i][3] ** 2) for i in range(len(parts)))
        v_x = v_x - r_x**2
        return ChannelMoments(
            A=A, r_z=r_z, v_z=np.maximum(v_z, 0.0), r_x=r_x, v_x=np.maximum(v_x, 0.0)
        )

    def region_probabilities(self, a_z, b_z, a_x, b_x):
        b_z, b_x = np.broadcast_arrays(
            np.asarray(b_z, dtype=float), np.asarray(b_x, dtype=float)
        )
        parts = self._region_moments(a_z, b_z, a_x, b_x)
        logA = np.stack([p[0] for p in parts])
        Amax = logA.max(axis=0)
        w = np.exp(logA - Amax)
        return w / w.sum(axis=0)

    def teacher_components(self, tau_hat_z, tau_hat_x, order):
        # deterministic channel: x0 = sigma(z0) region by region, with the
        # quadratic tilts folded into truncated-Gaussian teacher components
        comps = []
        log_weights = []
        nodes = []
        for reg in self.regions:
            a_i = tau_hat_z + reg.slope**2 * tau_hat_x
            if a_i <= 0:
                raise NonPositivePrecision("teacher tilt not normalisable")
            b_i = -reg.slope * tau_hat_x * reg.intercept
            mom = beliefs.interval_belief(a_i, np.array([b_i]), reg.lo, reg.hi)
            logw = -0.5 * tau_hat_x * reg.intercept**2 + mom.A[0]
            z0, w0 = truncnorm_nodes(b_i / a_i, 1.0 / a_i, reg.lo, reg.hi, order)
            log_weights.append(logw)
            nodes.append((z0, w0, reg))
        log_weights = np.array(log_weights)
        wreg = np.exp(log_weights - log_weights.max())
        wreg = wreg / wreg.sum()
        for w, (z0, w0, reg) in zip(wreg, nodes):
            if z0 is None or w < 1e-300:
                continue
            x0 = reg.intercept + reg.slope * z0
            comps.append((w, z0, x0, w0))
        return comps

    def sample(self, rng, z):
        return self.apply(z)


def relu_channel():
    return PiecewiseLinearChannel(
        regions=(Region(-np.inf, 0.0, 0.0, 0.0), Region(0.0, np.inf, 0.0, 1.0)),
        name="relu",
    )


def leaky_relu_channel(slope=0.1):
    return PiecewiseLinearChannel(
        regions=(Region(-np.inf, 0.0, 0.0, slope), Region(0.0, np.inf, 0.0, 1.0)),
        name="leaky_relu",
    )


def hard_tanh_channel():
    return PiecewiseLinearChannel(
        regions=(
            Region(-np.inf, -1.0, -1.0, 0.0),
            Region(-1.0, 1.0, 0.0, 1.0),
            Region(1.0, np.inf, 1.0, 0.0),
        ),
        name="hard_tanh",
    )


def abs_channel():
    return PiecewiseLinearChannel(
        regions=(Region(-np.inf, 0.0, 0.0, -1.0), Region(0.0, np.inf, 0.0, 1.0)),
        name="abs",
    )


def sgn_channel():
    return PiecewiseLinearChannel(
        regions=(Region(-np.inf, 0.0, -1.0, 0.0), Region(0.0, np.inf, 1.0, 0.0)),
        name="sgn",
    )


CHANNEL_KINDS = {
    "gaussian_noise": GaussianNoiseChannel,
    "relu": relu_channel,
    "leaky_relu": leaky_relu_channel,
    "hard_tanh": hard_tanh_channel,
    "abs": abs_channel,
    "sgn": sgn_channel,
}
