"""Separable prior factors.

Each prior exposes the EP posterior (componentwise scalar kernel, variance
averaged over components), teacher second moments under a quadratic tilt,
and the replica-symmetric / Bayes-optimal potentials obtained by low
dimensional integration of the scalar EP quantities.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import beliefs
from .beliefs import LOG_2PI, ScalarMoments
from .errors import DivergentTilt, ShapeMismatch
from .quadrature import DEFAULT_ORDER, check_estimates, gauss_hermite, truncnorm_nodes


def _size_dim(size):
    return int(np.prod(size))


def ensemble_average(components, m_hat, q_hat, kernel, order=DEFAULT_ORDER):
    """Average scalar EP quantities over the local teacher ensemble.

    ``components`` describe the teacher marginal of the signal (exact atoms
    plus Gaussian or truncated-Gaussian parts); the message is
    b = m_hat * x0 + sqrt(q_hat) * xi with xi standard normal.  Returns the
    averages of (A, x0*r, r^2, v).
    """
    xi, wxi = gauss_hermite(order)
    sq = math.sqrt(q_hat) if q_hat > 0 else 0.0
    acc = np.zeros(4)
    for comp in components:
        kind, w = comp[0], comp[1]
        if kind == "atom":
            x0, wx0 = np.array([comp[2]]), np.array([1.0])
        elif kind == "gauss":
            mean, var = comp[2], comp[3]
            x0, wx0 = mean + math.sqrt(var) * xi, wxi
        elif kind == "truncnorm":
            mean, var, lo, hi = comp[2:]
            x0, wx0 = truncnorm_nodes(mean, var, lo, hi, order)
            if x0 is None:
                continue
        else:
            raise ValueError(f"unknown component {kind}")
        if sq > 0.0:
            b = m_hat * x0[:, None] + sq * xi[None, :]
            wgt = wx0[:, None] * wxi[None, :]
            x0b = np.broadcast_to(x0[:, None], b.shape)
        else:
            b = m_hat * x0
            wgt = wx0
            x0b = x0
        mom = kernel(b.ravel())
        A, r, v = (np.reshape(val, b.shape) for val in (mom.A, mom.r, mom.v))
        wgt = wgt / 1.0
        acc[0] += w * np.sum(wgt * A)
        acc[1] += w * np.sum(wgt * x0b * r)
        acc[2] += w * np.sum(wgt * r**2)
        acc[3] += w * np.sum(wgt * v)
    return acc  # (Abar, m, q, v)


@dataclass
class PriorBase:
    """Common machinery; subclasses define the scalar kernel and teacher."""

    def scalar_posterior(self, a_in, b_in) -> ScalarMoments:
        raise NotImplementedError

    def second_moment(self):
        """E[x^2] (per real dimension) under the untilted prior."""
        return self.teacher_tau(0.0)

    # -- EP -----------------------------------------------------------------

    def posterior(self, a_in, b_in):
        """(total log-partition, posterior mean, component-average variance)."""
        b_in = np.asarray(b_in)
        if b_in.shape != tuple(np.atleast_1d(self.size)) and b_in.size != _size_dim(self.size):
            raise ShapeMismatch(f"prior size {self.size}, message shape {b_in.shape}")
        mom = self.scalar_posterior(a_in, b_in)
        return float(np.sum(mom.A)), mom.r, float(np.mean(mom.v))

    # -- teacher second moments ----------------------------------------------

    def teacher_A0(self, tau_hat):
        mom = self.scalar_posterior(tau_hat, np.zeros(1))
        return float(mom.A[0])

    def teacher_tau(self, tau_hat):
        mom = self.scalar_posterior(tau_hat, np.zeros(1))
        return float(mom.v[0] + mom.r[0] ** 2)

    def teacher_components(self, tau_hat):
        raise NotImplementedError

    # -- state evolution ------------------------------------------------------

    def rs_quantities(self, m_hat, q_hat, tau_hat, tau_hat0, teacher=None,
                      order=DEFAULT_ORDER, check=True):
        """RS potential and overlaps (Abar, m, q, v, tau) by quadrature."""
        if q_hat < 0:
            raise DivergentTilt(f"q_hat must be >= 0, got {q_hat}")
        teacher = teacher if teacher is not None else self
        comps = teacher.teacher_components(tau_hat0)
        a = tau_hat + q_hat
        kernel = lambda b: self.scalar_posterior(a, b)
        vals = ensemble_average(comps, m_hat, q_hat, kernel, order)
        if check:
            ref = ensemble_average(comps, m_hat, q_hat, kernel, order + 32)
            check_estimates(vals, ref, what="prior RS potential")
        Abar, m, q, v = vals
        return {"A": Abar, "m": m, "q": q, "v": v, "tau": q + v}

    def bo_quantities(self, m_hat, tau_hat0, order=DEFAULT_ORDER, check=True):
        """BO potential, overlap and variance (Abar0, m, v)."""
        if m_hat < 0:
            raise DivergentTilt(f"m_hat must be >= 0, got {m_hat}")
        out = self.rs_quantities(m_hat, m_hat, tau_hat0, tau_hat0,
                                 order=order, check=check)
        tau0 = self.teacher_tau(tau_hat0)
        return {"A": out["A"], "m": tau0 - out["v"], "v": out["v"]}

    def mutual_information(self, m_hat, tau_hat0, order=DEFAULT_ORDER):
        tau0 = self.teacher_tau(tau_hat0)
        bo = self.bo_quantities(m_hat, tau_hat0, order=order)
        return 0.5 * m_hat * tau0 - bo["A"] + self.teacher_A0(tau_hat0)


@dataclass
class GaussianPrior(PriorBase):
    mean: float = 0.0
    var: float = 1.0
    size: tuple = (1,)

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError("var must be positive")
        self.a0 = 1.0 / self.var
        self.b0 = self.mean / self.var
        self._A0 = beliefs.real_belief(self.a0, np.array([self.b0])).A[0]

    def scalar_posterior(self, a_in, b_in):
        if a_in + self.a0 <= beliefs.A_MIN:
            raise DivergentTilt(f"tilt {a_in} below -1/v0")
        mom = beliefs.real_belief(self.a0 + a_in, self.b0 + np.asarray(b_in))
        return ScalarMoments(A=mom.A - self._A0, r=mom.r, v=mom.v)

    def message(self):
        """Constant factor-to-variable message (natural parameters)."""
        return self.a0, self.b0

    def teacher_components(self, tau_hat):
        if self.a0 + tau_hat <= 0:
            raise DivergentTilt("tilted Gaussian integral diverges")
        at = self.a0 + tau_hat
        return [("gauss", 1.0, self.b0 / at, 1.0 / at)]

    def sample(self, rng, size=None):
        size = self.size if size is None else size
        return rng.normal(self.mean, math.sqrt(self.var), size=size)


@dataclass
class BinaryPrior(PriorBase):
    p_pos: float = 0.5
    size: tuple = (1,)

    def __post_init__(self):
        if not 0 < self.p_pos < 1:
            raise ValueError("p_pos must lie in (0,1)")
        self.b0 = 0.5 * math.log(self.p_pos / (1 - self.p_pos))
        self._A0 = beliefs.binary_belief(np.array([self.b0])).A[0]

    def scalar_posterior(self, a_in, b_in):
        mom = beliefs.binary_belief(self.b0 + np.asarray(b_in))
        return ScalarMoments(A=mom.A - self._A0 - 0.5 * a_in, r=mom.r, v=mom.v)

    def teacher_components(self, tau_hat):
        # the quadratic tilt is constant on {-1,+1} and cancels
        return [("atom", self.p_pos, 1.0), ("atom", 1.0 - self.p_pos, -1.0)]

    def sample(self, rng, size=None):
        size = self.size if size is None else size
        return np.where(rng.random(size) < self.p_pos, 1.0, -1.0)


@dataclass
class GaussBernoulliPrior(PriorBase):
    rho: float = 0.5
    mean: float = 0.0
    var: float = 1.0
    size: tuple = (1,)
    is_complex: bool = field(default=False)

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0,1]")
        if self.var <= 0:
            raise ValueError("var must be positive")
        self.a0 = 1.0 / self.var
        self.b0 = self.mean / self.var
        logit = math.log(self.rho / (1 - self.rho)) if self.rho < 1 else math.inf
        if self.is_complex:
            slab_A = beliefs.complex_real_belief(self.a0, np.array([self.b0 + 0j])).A[0]
        else:
            slab_A = beliefs.real_belief(self.a0, np.array([self.b0])).A[0]
        self.eta0 = slab_A - logit
        kernel = beliefs.complex_sparse_belief if self.is_complex else beliefs.sparse_belief
        self._A0 = kernel(self.a0, np.array([self.b0]), self.eta0).A[0]

    def scalar_posterior(self, a_in, b_in):
        if a_in + self.a0 <= beliefs.A_MIN:
            raise DivergentTilt(f"tilt {a_in} below -1/v0")
        kernel = beliefs.complex_sparse_belief if self.is_complex else beliefs.sparse_belief
        mom = kernel(self.a0 + a_in, self.b0 + np.asarray(b_in), self.eta0)
        return ScalarMoments(A=mom.A - self._A0, r=mom.r, v=mom.v, rho=mom.rho)

    def teacher_components(self, tau_hat):
        if self.is_complex:
            raise NotImplementedError("state evolution for complex sparse priors")
        if self.a0 + tau_hat <= 0:
            raise DivergentTilt("tilted slab integral diverges")
        at = self.a0 + tau_hat
        xi = beliefs.real_belief(at, np.array([self.b0])).A[0] - self.eta0
        rho_t = float(beliefs.sigmoid(np.array([xi]))[0])
        return [("atom", 1.0 - rho_t, 0.0), ("gauss", rho_t, self.b0 / at, 1.0 / at)]

    def sample(self, rng, size=None):
        size = self.size if size is None else size
        on = rng.random(size) < self.rho
        if self.is_complex:
            slab = self.mean + math.sqrt(self.var) * (
                rng.normal(size=size) + 1j * rng.normal(size=size)
            )
            return np.where(on, slab, 0.0 + 0j)
        return np.where(on, rng.normal(self.mean, math.sqrt(self.var), size=size), 0.0)


@dataclass
class IntervalPrior(PriorBase):
    x_min: float = 0.0
    x_max: float = np.inf
    mean: float = 0.0
    var: float = 1.0
    size: tuple = (1,)

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError("var must be positive")
        self.a0 = 1.0 / self.var
        self.b0 = self.mean / self.var
        self._A0 = beliefs.interval_belief(
            self.a0, np.array([self.b0]), self.x_min, self.x_max
        ).A[0]

    def scalar_posterior(self, a_in, b_in):
        if a_in + self.a0 <= beliefs.A_MIN:
            raise DivergentTilt(f"tilt {a_in} below -1/v0")
        mom = beliefs.interval_belief(
            self.a0 + a_in, self.b0 + np.asarray(b_in), self.x_min, self.x_max
        )
        return ScalarMoments(A=mom.A - self._A0, r=mom.r, v=mom.v)

    def teacher_components(self, tau_hat):
        if self.a0 + tau_hat <= 0:
            raise DivergentTilt("tilted interval integral diverges")
        at = self.a0 + tau_hat
        return [("truncnorm", 1.0, self.b0 / at, 1.0 / at, self.x_min, self.x_max)]

    def sample(self, rng, size=None):
        from scipy.stats import truncnorm as _tn

        size = self.size if size is None else size
        sd = math.sqrt(self.var)
        lo, hi = (self.x_min - self.mean) / sd, (self.x_max - self.mean) / sd
        return _tn.rvs(lo, hi, loc=self.mean, scale=sd, size=size, random_state=rng)


PRIOR_KINDS = {
    "gaussian": GaussianPrior,
    "binary": BinaryPrior,
    "gauss_bernoulli": GaussBernoulliPrior,
    "interval": IntervalPrior,
}
