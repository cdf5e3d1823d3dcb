"""Separable likelihood factors: Gaussian noise and deterministic
observations (sign, absolute value, phase, modulus).

Deterministic kinds have no observation density: their state-evolution
ensemble averages integrate the observation by pushing the teacher signal
through the observation map, never by quadrature over y.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import beliefs
from .beliefs import LOG_2PI, ScalarMoments
from .errors import DomainError, NonPositivePrecision
from .quadrature import (
    DEFAULT_ORDER,
    check_estimates,
    gauss_hermite,
    rayleigh_nodes,
    truncnorm_nodes,
)


def _likelihood_average(components, m_hat, q_hat, kernel, order, complex_b=False):
    """Average scalar EP quantities over teacher (z0, y) components.

    Each component is (weight, z0 nodes, node weights, y per node).  The
    message is b = m_hat z0 + sqrt(q_hat) xi.  Returns (Abar, m, q, v)
    with overlaps per real dimension.
    """
    xi, wxi = gauss_hermite(order)
    sq = math.sqrt(q_hat) if q_hat > 0 else 0.0
    acc = np.zeros(4)
    for w, z0, wz0, y in components:
        if sq > 0.0 and complex_b:
            zeta = xi[:, None] + 1j * xi[None, :]
            wzeta = (wxi[:, None] * wxi[None, :]).ravel()
            b = m_hat * z0[:, None] + sq * zeta.ravel()[None, :]
            wgt = wz0[:, None] * wzeta[None, :]
        elif sq > 0.0:
            b = m_hat * z0[:, None] + sq * xi[None, :]
            wgt = wz0[:, None] * wxi[None, :]
        else:
            b = (m_hat * z0)[:, None]
            wgt = wz0[:, None]
        yb = np.broadcast_to(np.asarray(y)[:, None], b.shape)
        z0b = np.broadcast_to(z0[:, None], b.shape)
        mom = kernel(b.ravel(), yb.ravel())
        A, r, v = (np.reshape(val, b.shape) for val in (mom.A, mom.r, mom.v))
        if complex_b:
            acc[0] += w * np.sum(wgt * A) / 2.0
            acc[1] += w * np.sum(wgt * (z0b.conj() * r).real) / 2.0
            acc[2] += w * np.sum(wgt * (r * r.conj()).real) / 2.0
        else:
            acc[0] += w * np.sum(wgt * A)
            acc[1] += w * np.sum(wgt * z0b * r)
            acc[2] += w * np.sum(wgt * r**2)
        acc[3] += w * np.sum(wgt * v)
    return acc


@dataclass
class LikelihoodBase:
    """Shared EP/SE plumbing; subclasses define kernels and teacher pieces."""

    #: y values live on this codomain; used for validation and sampling
    deterministic = True
    complex_input = False

    def scalar_posterior(self, a_in, b_in, y) -> ScalarMoments:
        raise NotImplementedError

    def posterior(self, a_in, b_in):
        mom = self.scalar_posterior(a_in, np.asarray(b_in), self.y)
        return float(np.sum(mom.A)), mom.r, float(np.mean(mom.v))

    # -- teacher ---------------------------------------------------------

    def teacher_A0(self, tau_hat):
        # integrating the observation out leaves a plain Gaussian integral
        if tau_hat <= 0:
            raise NonPositivePrecision(f"teacher tilt must be positive, got {tau_hat}")
        return 0.5 * (LOG_2PI - math.log(tau_hat))

    def teacher_tau(self, tau_hat):
        return 1.0 / tau_hat

    def teacher_zy_components(self, tau_hat0, order):
        """(weight, z0 nodes, weights, y values) for the SE double average."""
        raise NotImplementedError

    def entropic_noise(self):
        """Observation entropy per component; None for deterministic kinds."""
        return None

    # -- state evolution ---------------------------------------------------

    def _A_singular_expectation(self, tau_hat0):
        """Analytic E over the teacher of any non-smooth y-only A term."""
        return 0.0

    def scalar_posterior_smooth(self, a_in, b_in, y):
        """Kernel with the non-smooth y-only part of A removed (default: none)."""
        return self.scalar_posterior(a_in, b_in, y)

    def rs_quantities(self, m_hat, q_hat, tau_hat, tau_hat0, teacher=None,
                      order=DEFAULT_ORDER, check=True):
        matched = teacher is None or teacher is self
        teacher = teacher if teacher is not None else self
        a = tau_hat + q_hat
        if matched:
            kernel = lambda b, y: self.scalar_posterior_smooth(a, b, y)
            A_extra = self._A_singular_expectation(tau_hat0)
        else:
            kernel = lambda b, y: self.scalar_posterior(a, b, y)
            A_extra = 0.0

        def run(n):
            comps = teacher.teacher_zy_components(tau_hat0, n)
            return _likelihood_average(comps, m_hat, q_hat, kernel, n,
                                       complex_b=self.complex_input)

        vals = run(order)
        if check:
            check_estimates(vals, run(order + 32), what="likelihood RS potential")
        Abar, m, q, v = vals
        return {"A": Abar + A_extra, "m": m, "q": q, "v": v, "tau": q + v}

    def bo_quantities(self, m_hat, tau_hat0, order=DEFAULT_ORDER, check=True):
        out = self.rs_quantities(m_hat, m_hat, tau_hat0, tau_hat0,
                                 order=order, check=check)
        tau0 = self.teacher_tau(tau_hat0)
        return {"A": out["A"], "m": tau0 - out["v"], "v": out["v"]}

    def entropic_potential(self, m_hat, tau_hat0, order=DEFAULT_ORDER):
        """H = I + E; for deterministic observations I alone is ill-defined."""
        tau0 = self.teacher_tau(tau_hat0)
        bo = self.bo_quantities(m_hat, tau_hat0, order=order)
        return 0.5 * m_hat * tau0 - bo["A"] + self.teacher_A0(tau_hat0)

    def mutual_information(self, m_hat, tau_hat0, order=DEFAULT_ORDER):
        noise = self.entropic_noise()
        if noise is None:
            raise DomainError(
                "mutual information ill-defined for a deterministic observation; "
                "use entropic_potential"
            )
        return self.entropic_potential(m_hat, tau_hat0, order=order) - noise


@dataclass
class GaussianLikelihood(LikelihoodBase):
    var: float = 1.0
    y: np.ndarray = field(default_factory=lambda: np.zeros(1))

    deterministic = False

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError("var must be positive")
        self.y = np.asarray(self.y, dtype=float)
        self.a_y = 1.0 / self.var

    def message(self):
        """Constant backward message (iteration independent)."""
        return self.a_y, self.y * self.a_y

    def scalar_posterior(self, a_in, b_in, y):
        if a_in + self.a_y <= 0:
            raise NonPositivePrecision(f"a_in + 1/var must be positive, got {a_in}")
        b_y = np.asarray(y) * self.a_y
        mom = beliefs.real_belief(self.a_y + a_in, b_y + np.asarray(b_in))
        base = beliefs.real_belief(self.a_y, b_y)
        return ScalarMoments(A=mom.A - base.A, r=mom.r, v=mom.v)

    def teacher_zy_components(self, tau_hat0, order):
        tauz = 1.0 / tau_hat0
        xi, wxi = gauss_hermite(order)
        z0 = math.sqrt(tauz) * xi
        sd = math.sqrt(self.var)
        z0g = np.repeat(z0, order)
        wg = np.repeat(wxi, order) * np.tile(wxi, order)
        yg = z0g + sd * np.tile(xi, order)
        return [(1.0, z0g, wg, yg)]

    def entropic_noise(self):
        return 0.5 * math.log(2 * math.pi * math.e * self.var)

    def sample(self, rng, z):
        return z + rng.normal(0.0, math.sqrt(self.var), size=np.shape(z))


@dataclass
class SgnLikelihood(LikelihoodBase):
    y: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise DomainError("sgn observations must be +-1")

    def scalar_posterior(self, a_in, b_in, y):
        if a_in <= 0:
            raise NonPositivePrecision(f"sgn likelihood needs a_in > 0, got {a_in}")
        b = np.asarray(b_in)
        y = np.asarray(y)
        pos = beliefs.positive_belief(a_in, b, sign=+1)
        neg = beliefs.positive_belief(a_in, b, sign=-1)
        take = y > 0
        return ScalarMoments(
            A=np.where(take, pos.A, neg.A),
            r=np.where(take, pos.r, neg.r),
            v=np.where(take, pos.v, neg.v),
        )

    def teacher_zy_components(self, tau_hat0, order):
        tauz = 1.0 / tau_hat0
        out = []
        for sign in (+1.0, -1.0):
            lo, hi = (0.0, np.inf) if sign > 0 else (-np.inf, 0.0)
            z0, wz0 = truncnorm_nodes(0.0, tauz, lo, hi, order)
            out.append((0.5, z0, wz0, np.full_like(z0, sign)))
        return out

    def sample(self, rng, z):
        return np.where(np.asarray(z) >= 0, 1.0, -1.0)


@dataclass
class AbsLikelihood(LikelihoodBase):
    y: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if np.any(self.y < 0):
            raise DomainError("abs observations must be non-negative")

    def scalar_posterior(self, a_in, b_in, y):
        if a_in <= 0:
            raise NonPositivePrecision(f"abs likelihood needs a_in > 0, got {a_in}")
        y = np.asarray(y)
        mom = beliefs.binary_belief(y * np.asarray(b_in))
        return ScalarMoments(
            A=-0.5 * a_in * y**2 + mom.A,
            r=y * mom.r,
            v=y**2 * mom.v,
        )

    def teacher_zy_components(self, tau_hat0, order):
        tauz = 1.0 / tau_hat0
        out = []
        for sign, lo, hi in ((+1.0, 0.0, np.inf), (-1.0, -np.inf, 0.0)):
            z0, wz0 = truncnorm_nodes(0.0, tauz, lo, hi, order)
            out.append((0.5, z0, wz0, np.abs(z0)))
        return out

    def sample(self, rng, z):
        return np.abs(np.asarray(z))


@dataclass
class PhaseLikelihood(LikelihoodBase):
    y: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))

    complex_input = True

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=complex)
        if np.any(np.abs(np.abs(self.y) - 1.0) > 1e-9):
            raise DomainError("phase observations must be unit complex")

    def scalar_posterior(self, a_in, b_in, y):
        if a_in <= 0:
            raise NonPositivePrecision(f"phase likelihood needs a_in > 0, got {a_in}")
        y = np.asarray(y)
        b_eff = (np.conj(y) * np.asarray(b_in)).real
        mom = beliefs.positive_belief(a_in, b_eff, sign=+1)
        return ScalarMoments(A=mom.A, r=y * mom.r, v=0.5 * mom.v)

    def teacher_zy_components(self, tau_hat0, order):
        # rotate so the teacher is on the positive real axis; y = 1
        tauz = 1.0 / tau_hat0
        s, ws = rayleigh_nodes(tauz, order)
        return [(1.0, s.astype(complex), ws, np.ones_like(s, dtype=complex))]

    def sample(self, rng, z):
        z = np.asarray(z)
        mod = np.abs(z)
        return np.where(mod > 0, z / np.where(mod > 0, mod, 1.0), 1.0 + 0j)


@dataclass
class ModulusLikelihood(LikelihoodBase):
    y: np.ndarray = field(default_factory=lambda: np.ones(1))

    complex_input = True

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if np.any(self.y <= 0):
            raise DomainError("modulus observations must be positive")

    def scalar_posterior(self, a_in, b_in, y):
        if a_in <= 0:
            raise NonPositivePrecision(f"modulus likelihood needs a_in > 0, got {a_in}")
        y = np.asarray(y, dtype=float)
        mom = beliefs.phase_belief(y * np.asarray(b_in, dtype=complex))
        return ScalarMoments(
            A=-0.5 * a_in * y**2 + np.log(y) + mom.A,
            r=y * mom.r,
            v=y**2 * mom.v,
        )

    def teacher_zy_components(self, tau_hat0, order):
        tauz = 1.0 / tau_hat0
        s, ws = rayleigh_nodes(tauz, order)
        return [(1.0, s.astype(complex), ws, s)]

    def scalar_posterior_smooth(self, a_in, b_in, y):
        # ln y is integrable but not smooth at y -> 0; it slows the radial
        # rule, so it is averaged analytically instead
        mom = self.scalar_posterior(a_in, b_in, y)
        return ScalarMoments(A=mom.A - np.log(np.asarray(y, dtype=float)),
                             r=mom.r, v=mom.v)

    def _A_singular_expectation(self, tau_hat0):
        # E[ln s] for the Rayleigh radius with per-dimension variance tau;
        # the full A counts two real dimensions, so divide by 2
        tau = 1.0 / tau_hat0
        return 0.25 * (math.log(2.0 * tau) - np.euler_gamma)

    def sample(self, rng, z):
        return np.abs(np.asarray(z))


LIKELIHOOD_KINDS = {
    "gaussian": GaussianLikelihood,
    "sgn": SgnLikelihood,
    "abs": AbsLikelihood,
    "phase": PhaseLikelihood,
    "modulus": ModulusLikelihood,
}
