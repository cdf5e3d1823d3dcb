"""MAP factor modules for l1 and group-l2 (l2,1) penalties.

These are zero-temperature factors: A is the Moreau-envelope form of the
penalty, r the proximal map, and v the scaled variance (component average
of dr/db).  They only make sense inside a MAP-mode engine run.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositivePrecision


def soft_threshold(u, kappa):
    return np.sign(u) * np.maximum(np.abs(u) - kappa, 0.0)


def group_soft_threshold(u, kappa):
    """Shrink each column of u (shape (d, N)) by its l2 norm."""
    norms = np.linalg.norm(u, axis=0)
    scale = np.maximum(1.0 - kappa / np.where(norms > 0, norms, 1.0), 0.0)
    return u * scale


@dataclass
class L1Penalty:
    strength: float = 1.0
    size: tuple = (1,)

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("strength must be >= 0")

    def posterior(self, a_in, b_in):
        if a_in <= 0:
            raise NonPositivePrecision(f"penalty needs a_in > 0, got {a_in}")
        b = np.asarray(b_in, dtype=float)
        kappa = self.strength / a_in
        u = b / a_in
        r = soft_threshold(u, kappa)
        # ties at |u| == kappa break toward zero, matching the prox limit;
        # a zero penalty leaves the identity map (derivative one everywhere)
        active = np.abs(u) > kappa if kappa > 0 else np.ones_like(u, dtype=bool)
        v = active.mean() / a_in
        env = np.where(
            np.abs(u) <= kappa,
            0.5 * u**2,
            kappa * np.abs(u) - 0.5 * kappa**2,
        )
        A = float(np.sum(b**2 / (2 * a_in) - a_in * env))
        return A, r, float(v)

    def moreau_envelope(self, u):
        """M_{(strength/a) |.|_1}(u) evaluated at a = 1 scale-free form."""
        kappa = self.strength
        return np.where(
            np.abs(u) <= kappa, 0.5 * u**2, kappa * np.abs(u) - 0.5 * kappa**2
        ).sum()

    def energy(self, x):
        return self.strength * np.sum(np.abs(x))


@dataclass
class GroupL21Penalty:
    strength: float = 1.0
    size: tuple = (1, 1)  # (d, N)

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("strength must be >= 0")
        if len(self.size) != 2:
            raise ValueError("size must be (d, N)")

    def posterior(self, a_in, b_in):
        if a_in <= 0:
            raise NonPositivePrecision(f"penalty needs a_in > 0, got {a_in}")
        d, n = self.size
        b = np.asarray(b_in, dtype=float).reshape(d, n)
        kappa = self.strength / a_in
        u = b / a_in
        norms = np.linalg.norm(u, axis=0)
        r = group_soft_threshold(u, kappa)
        active = norms > kappa if kappa > 0 else np.ones_like(norms, dtype=bool)
        # divergence of the group shrinkage: d - (d-1) kappa / |u| per group
        div = np.where(active, d - (d - 1) * kappa / np.where(active, norms, 1.0), 0.0)
        v = float(div.sum() / (d * n) / a_in)
        env = np.where(
            norms <= kappa, 0.5 * norms**2, kappa * norms - 0.5 * kappa**2
        )
        A = float(np.sum(b**2) / (2 * a_in) - a_in * env.sum())
        return A, r.reshape(np.shape(b_in)), v

    def energy(self, x):
        d, n = self.size
        return self.strength * np.linalg.norm(
            np.asarray(x).reshape(d, n), axis=0
        ).sum()


PENALTY_KINDS = {"l1": L1Penalty, "l21": GroupL21Penalty}
