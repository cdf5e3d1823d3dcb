"""Linear channel x = W z in all supported variants.

Every operator precomputes a diagonalisation (SVD or FFT) once at build
time; posterior evaluations are matrix-free afterwards.  Spectral state
evolution and the random-matrix transforms live here too.

Real-dimension bookkeeping: a complex entry counts as two real dimensions.
``spectrum`` always lists the eigenvalues of W^T W viewed as an operator
between real spaces (zero-padded on the input side), and ``alpha`` is the
ratio of output to input real dimensions, so that the variance identity
a_z v_z + alpha a_x v_x = 1 holds verbatim.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .beliefs import LOG_2PI
from .errors import (
    DomainError,
    NonPositiveEffectivePrecision,
    NonPositiveTilt,
    ShapeMismatch,
    SingularPrecision,
)


@dataclass
class LinearMoments:
    A: float
    r_z: np.ndarray
    v_z: float
    r_x: np.ndarray
    v_x: float


class LinearOperatorBase:
    """Interface: apply/adjoint, tilted solve, spectrum and dimensions."""

    kind = "generic"
    complex_in = False
    complex_out = False

    @property
    def dim_in(self):
        return int(np.prod(self.shape_in)) * (2 if self.complex_in else 1)

    @property
    def dim_out(self):
        return int(np.prod(self.shape_out)) * (2 if self.complex_out else 1)

    @property
    def alpha(self):
        return self.dim_out / self.dim_in

    def apply(self, z):
        raise NotImplementedError

    def adjoint(self, x):
        """Transpose with respect to the real inner product Re<u, v>."""
        raise NotImplementedError

    def solve_tilted(self, a_z, a_x, b):
        """(a_z I + a_x W^T W)^{-1} b via the precomputed diagonalisation."""
        raise NotImplementedError

    def spectrum(self):
        """Eigenvalues of W^T W over input real dimensions (zero-padded)."""
        raise NotImplementedError

    def _check_precisions(self, a_z, a_x):
        lam = self.spectrum()
        eff = a_z + a_x * lam
        if eff.min() <= 0:
            raise NonPositiveEffectivePrecision(
                f"a_z + a_x*lambda reaches {eff.min():.3e}"
            )

    def posterior(self, a_z, b_z, a_x, b_x):
        """EP moments of both legs; A totals over real dimensions."""
        self._check_precisions(a_z, a_x)
        lam = self.spectrum()
        b = b_z + self.adjoint(b_x)
        r_z = self.solve_tilted(a_z, a_x, b)
        r_x = self.apply(r_z)
        eff = a_z + a_x * lam
        v_z = float(np.mean(1.0 / eff))
        v_x = float(np.sum(lam / eff) / self.dim_out)
        inner = np.sum((np.conj(b) * r_z).real)
        A = 0.5 * inner + 0.5 * np.sum(LOG_2PI - np.log(eff))
        return LinearMoments(A=float(A), r_z=r_z, v_z=v_z, r_x=r_x, v_x=v_x)

    # -- teacher and state evolution (spectral closed forms) -----------------

    def _measure(self):
        return EmpiricalSpectrum(self.spectrum(), self.alpha)


class DenseOperator(LinearOperatorBase):
    kind = "dense"

    def __init__(self, matrix):
        W = np.asarray(matrix, dtype=float)
        if W.ndim != 2:
            raise ShapeMismatch("dense operator expects a 2-d matrix")
        self.W = W
        self.shape_out, self.shape_in = (W.shape[0],), (W.shape[1],)
        U, s, Vt = np.linalg.svd(W, full_matrices=False)
        recon = (U * s) @ Vt
        scale = np.linalg.norm(W) or 1.0
        if np.linalg.norm(W - recon) > 1e-8 * scale:
            raise ShapeMismatch("SVD reconstruction failed")
        self.U, self.s, self.Vt = U, s, Vt
        lam = np.zeros(W.shape[1])
        lam[: s.size] = s**2
        self._lam = lam

    def apply(self, z):
        return self.W @ z

    def adjoint(self, x):
        return self.W.T @ x

    def solve_tilted(self, a_z, a_x, b):
        t = self.Vt @ b
        scaled = t / (a_z + a_x * self.s**2)
        out = self.Vt.T @ scaled
        if self.s.size < b.size:
            # components outside the row space see only the z-side precision
            out += (b - self.Vt.T @ t) / a_z
        return out

    def spectrum(self):
        return self._lam


class RotationOperator(LinearOperatorBase):
    kind = "rotation"

    def __init__(self, matrix):
        Q = np.asarray(matrix)
        self.complex_in = self.complex_out = np.iscomplexobj(Q)
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ShapeMismatch("rotation must be square")
        eye = np.eye(n)
        if not np.allclose(Q.conj().T @ Q, eye, atol=1e-8):
            raise ShapeMismatch("matrix is not orthogonal/unitary")
        self.Q = Q
        self.shape_in = self.shape_out = (n,)

    def apply(self, z):
        return self.Q @ z

    def adjoint(self, x):
        return self.Q.conj().T @ x

    def solve_tilted(self, a_z, a_x, b):
        return b / (a_z + a_x)

    def spectrum(self):
        return np.ones(self.dim_in)


class ScalingOperator(LinearOperatorBase):
    kind = "scaling"

    def __init__(self, diag, shape=None):
        d = np.asarray(diag, dtype=float)
        if d.ndim != 1:
            raise ShapeMismatch("scaling expects a 1-d diagonal")
        M, N = shape if shape is not None else (d.size, d.size)
        if d.size > min(M, N):
            raise ShapeMismatch("diagonal longer than min(M, N)")
        self.d = d
        self.shape_out, self.shape_in = (M,), (N,)
        lam = np.zeros(N)
        lam[: d.size] = d**2
        self._lam = lam

    def apply(self, z):
        x = np.zeros(self.shape_out[0], dtype=np.asarray(z).dtype)
        x[: self.d.size] = self.d * z[: self.d.size]
        return x

    def adjoint(self, x):
        z = np.zeros(self.shape_in[0], dtype=np.asarray(x).dtype)
        z[: self.d.size] = self.d * x[: self.d.size]
        return z

    def solve_tilted(self, a_z, a_x, b):
        return b / (a_z + a_x * self._lam)

    def spectrum(self):
        return self._lam


class DFTOperator(LinearOperatorBase):
    """Unitary discrete Fourier transform.

    With a real input variable the operator is an isometry from R^N into
    C^N (2N real dimensions), so alpha = 2 and the adjoint projects back
    to the real axis.
    """

    kind = "dft"
    complex_out = True

    def __init__(self, n, real_input=True):
        self.n = int(n)
        self.real_input = bool(real_input)
        self.complex_in = not real_input
        self.shape_in = self.shape_out = (self.n,)
        self._scale = 1.0 / math.sqrt(self.n)

    def apply(self, z):
        return np.fft.fft(z) * self._scale

    def adjoint(self, x):
        back = np.fft.ifft(x) / self._scale
        return back.real if self.real_input else back

    def solve_tilted(self, a_z, a_x, b):
        return b / (a_z + a_x)

    def spectrum(self):
        return np.ones(self.dim_in)


class ConvolutionOperator(LinearOperatorBase):
    """Circular convolution x = w * z; diagonal in the Fourier basis."""

    kind = "convolution"

    def __init__(self, weights, is_complex=False):
        w = np.asarray(weights, dtype=complex if is_complex else float)
        if w.ndim != 1:
            raise ShapeMismatch("convolution weights must be 1-d")
        self.complex_in = self.complex_out = bool(is_complex)
        self.w = w
        self.shape_in = self.shape_out = (w.size,)
        self.w_hat = np.fft.fft(w)
        lam = np.abs(self.w_hat) ** 2
        self._lam = np.repeat(lam, 2) if is_complex else lam

    def apply(self, z):
        out = np.fft.ifft(np.fft.fft(z) * self.w_hat)
        return out if self.complex_in else out.real

    def adjoint(self, x):
        out = np.fft.ifft(np.fft.fft(x) * np.conj(self.w_hat))
        return out if self.complex_in else out.real

    def solve_tilted(self, a_z, a_x, b):
        lam = np.abs(self.w_hat) ** 2
        out = np.fft.ifft(np.fft.fft(b) / (a_z + a_x * lam))
        return out if self.complex_in else out.real

    def spectrum(self):
        return self._lam


class GradientOperator(LinearOperatorBase):
    """Periodic forward differences along each axis of the signal.

    Output stacks one difference field per axis: shape (d, *signal_shape).
    Periodic boundaries make the operator a convolution with an exact
    Fourier spectrum.
    """

    kind = "gradient"

    def __init__(self, signal_shape):
        shape = tuple(int(n) for n in np.atleast_1d(signal_shape))
        self.signal_shape = shape
        self.ndim_signal = len(shape)
        self.shape_in = shape
        self.shape_out = (self.ndim_signal, *shape)
        freqs = np.meshgrid(
            *[2.0 * np.pi * np.fft.fftfreq(n) for n in shape], indexing="ij"
        )
        self._axis_hat = [np.exp(1j * f) - 1.0 for f in freqs]
        self._lam_grid = sum(np.abs(h) ** 2 for h in self._axis_hat)

    def apply(self, z):
        z = np.reshape(z, self.signal_shape)
        return np.stack(
            [np.roll(z, -1, axis=ax) - z for ax in range(self.ndim_signal)]
        )

    def adjoint(self, x):
        x = np.reshape(x, self.shape_out)
        out = np.zeros(self.signal_shape)
        for ax in range(self.ndim_signal):
            out += np.roll(x[ax], 1, axis=ax) - x[ax]
        return out

    def solve_tilted(self, a_z, a_x, b):
        b = np.reshape(b, self.signal_shape)
        sol = np.fft.ifftn(np.fft.fftn(b) / (a_z + a_x * self._lam_grid))
        return sol.real

    def spectrum(self):
        return self._lam_grid.ravel().copy()


def build_operator(kind, payload=None, **kwargs):
    if kind == "dense":
        return DenseOperator(payload)
    if kind == "rotation":
        return RotationOperator(payload)
    if kind == "scaling":
        return ScalingOperator(payload, kwargs.get("shape"))
    if kind == "dft":
        return DFTOperator(payload, real_input=kwargs.get("real_input", True))
    if kind == "convolution":
        return ConvolutionOperator(payload, is_complex=kwargs.get("is_complex", False))
    if kind == "gradient":
        return GradientOperator(payload)
    raise ShapeMismatch(f"unknown linear operator kind {kind!r}")


# ---------------------------------------------------------------------------
# full covariance variant
# ---------------------------------------------------------------------------


def _as_precision_matrix(a, n):
    if np.isscalar(a):
        return a * np.eye(n)
    a = np.asarray(a, dtype=float)
    if a.shape != (n, n):
        raise ShapeMismatch(f"precision must be scalar or {n}x{n}")
    return a


def fullcov_posterior(W, a_z, b_z, a_x, b_x):
    """Posterior with full covariance beliefs; exact Gaussian algebra."""
    W = np.asarray(W, dtype=float)
    M, N = W.shape
    A = _as_precision_matrix(a_z, N) + W.T @ _as_precision_matrix(a_x, M) @ W
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularPrecision("combined precision not positive definite") from exc
    b = b_z + W.T @ b_x
    r_z = np.linalg.solve(A, b)
    sigma_z = np.linalg.inv(A)
    r_x = W @ r_z
    sigma_x = W @ sigma_z @ W.T
    del L
    return r_z, sigma_z, r_x, sigma_x


def fullcov_messages(W, a_z, b_z, a_x, b_x):
    """Forward/backward message parameters of the exact Gaussian factor."""
    W = np.asarray(W, dtype=float)
    M, N = W.shape
    a_fz = W.T @ _as_precision_matrix(a_x, M) @ W
    b_fz = W.T @ b_x
    sigma_z_in = np.linalg.inv(_as_precision_matrix(a_z, N))
    sigma_fx = W @ sigma_z_in @ W.T
    r_fx = W @ (sigma_z_in @ b_z)
    return (a_fz, b_fz), (sigma_fx, r_fx)


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------


class EmpiricalSpectrum:
    """Spectrum given by explicit eigenvalues with equal weights."""

    def __init__(self, lam, alpha):
        self.lam = np.asarray(lam, dtype=float)
        if np.any(self.lam < -1e-12):
            raise DomainError("negative eigenvalue in spectrum")
        self.lam = np.maximum(self.lam, 0.0)
        self.alpha = float(alpha)

    def nodes(self):
        n = self.lam.size
        return self.lam, np.full(n, 1.0 / n)

    def lam_min_positive(self):
        pos = self.lam[self.lam > 0]
        return pos.min() if pos.size else 0.0

    def lam_max(self):
        return self.lam.max()


class MarchenkoPastur:
    """Limiting spectrum of W^T W for iid entries of variance 1/N.

    Bulk on [(1-sqrt(alpha))^2, (1+sqrt(alpha))^2] plus a point mass
    max(0, 1-alpha) at zero.  Gauss-Chebyshev (second kind) nodes absorb
    the square-root edge factors exactly.
    """

    def __init__(self, alpha, n_nodes=400):
        if alpha <= 0:
            raise DomainError("alpha must be positive")
        self.alpha = float(alpha)
        sq = math.sqrt(self.alpha)
        self.lam_minus, self.lam_plus = (1 - sq) ** 2, (1 + sq) ** 2
        self.atom = max(0.0, 1.0 - self.alpha)
        j = np.arange(1, n_nodes + 1)
        theta = j * np.pi / (n_nodes + 1)
        t = np.cos(theta)
        mid = 0.5 * (self.lam_plus + self.lam_minus)
        half = 0.5 * (self.lam_plus - self.lam_minus)
        lam = mid + half * t
        w = (half**2 / (2 * np.pi)) * (np.pi / (n_nodes + 1)) * np.sin(theta) ** 2 * 2.0 / lam
        # renormalise the bulk mass to min(1, alpha) exactly
        w *= min(1.0, self.alpha) / w.sum()
        self._lam, self._w = lam, w

    def nodes(self):
        if self.atom > 0:
            return (
                np.concatenate([[0.0], self._lam]),
                np.concatenate([[self.atom], self._w]),
            )
        return self._lam, self._w

    def lam_min_positive(self):
        return self.lam_minus

    def lam_max(self):
        return self.lam_plus


def _expect(measure, f):
    lam, w = measure.nodes()
    return float(np.sum(w * f(lam)))


# ---------------------------------------------------------------------------
# teacher / RS / BO spectral potentials
# ---------------------------------------------------------------------------


def linear_teacher(measure, tau_hat_z, tau_hat_x):
    """(A0 per input dim, tau_z, tau_x) for the linear factor."""
    lam, w = measure.nodes()
    tl = tau_hat_z + lam * tau_hat_x
    if tl.min() <= 0:
        raise NonPositiveTilt(f"tau_hat on spectrum reaches {tl.min():.3e}")
    A0 = 0.5 * float(np.sum(w * (LOG_2PI - np.log(tl))))
    tau_z = float(np.sum(w / tl))
    tau_x = float(np.sum(w * lam / tl)) / measure.alpha
    return A0, tau_z, tau_x


def linear_rs(measure, hats_z, hats_x, tau_hat0_z, tau_hat0_x):
    """RS potential and overlaps from the per-eigenvalue closed form."""
    lam, w = measure.nodes()
    mz, qz, tz = hats_z
    mx, qx, tx = hats_x
    m_l = mz + lam * mx
    q_l = qz + lam * qx
    t_l = tz + lam * tx
    t0_l = tau_hat0_z + lam * tau_hat0_x
    a_l = t_l + q_l
    if a_l.min() <= 0 or t0_l.min() <= 0:
        raise NonPositiveEffectivePrecision("per-eigenvalue precision <= 0")
    tau0_l = 1.0 / t0_l
    A_l = (m_l**2 * tau0_l + q_l) / (2 * a_l) + 0.5 * (LOG_2PI - np.log(a_l))
    m_lam = m_l * tau0_l / a_l
    q_lam = (m_l**2 * tau0_l + q_l) / a_l**2
    v_lam = 1.0 / a_l
    alpha = measure.alpha

    def agg(val):
        z = float(np.sum(w * val))
        x = float(np.sum(w * lam * val)) / alpha
        return z, x

    m_z, m_x = agg(m_lam)
    q_z, q_x = agg(q_lam)
    v_z, v_x = agg(v_lam)
    return {
        "A": float(np.sum(w * A_l)),
        "z": {"m": m_z, "q": q_z, "v": v_z, "tau": q_z + v_z},
        "x": {"m": m_x, "q": q_x, "v": v_x, "tau": q_x + v_x},
    }


def linear_bo(measure, m_hat_z, m_hat_x, tau_hat0_z, tau_hat0_x):
    lam, w = measure.nodes()
    m_l = m_hat_z + lam * m_hat_x
    t0_l = tau_hat0_z + lam * tau_hat0_x
    a_l = t0_l + m_l
    if a_l.min() <= 0 or t0_l.min() <= 0:
        raise NonPositiveEffectivePrecision("per-eigenvalue precision <= 0")
    tau0_l = 1.0 / t0_l
    A_l = 0.5 * m_l * tau0_l + 0.5 * (LOG_2PI - np.log(a_l))
    v_lam = 1.0 / a_l
    alpha = measure.alpha
    v_z = float(np.sum(w * v_lam))
    v_x = float(np.sum(w * lam * v_lam)) / alpha
    tau0_z = float(np.sum(w * tau0_l))
    tau0_x = float(np.sum(w * lam * tau0_l)) / alpha
    return {
        "A": float(np.sum(w * A_l)),
        "z": {"m": tau0_z - v_z, "v": v_z},
        "x": {"m": tau0_x - v_x, "v": v_x},
    }


def linear_mutual_information(measure, m_hat_z, m_hat_x, tau_hat0_z, tau_hat0_x):
    lam, w = measure.nodes()
    m_l = m_hat_z + lam * m_hat_x
    t0_l = tau_hat0_z + lam * tau_hat0_x
    a_l = t0_l + m_l
    return 0.5 * float(np.sum(w * np.log(a_l / t0_l)))


# ---------------------------------------------------------------------------
# random matrix transforms
# ---------------------------------------------------------------------------


def shannon_transform(measure, gamma):
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    return _expect(measure, lambda lam: np.log1p(gamma * lam))


def eta_transform(measure, gamma):
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    return _expect(measure, lambda lam: 1.0 / (1.0 + gamma * lam))


def stieltjes_transform(measure, z):
    lam, w = measure.nodes()
    if lam.min() <= z <= lam.max():
        raise DomainError("Stieltjes transform evaluated inside the support")
    return float(np.sum(w / (lam - z)))


def _moments(measure, k):
    return [_expect(measure, lambda lam, p=p: lam**p) for p in range(1, k + 1)]


def r_transform(measure, s):
    """R(s) = S^{-1}(-s) - 1/s, with a cumulant series near s = 0."""
    if isinstance(measure, MarchenkoPastur):
        if s >= 1.0:
            raise DomainError("MP R-transform requires s < 1")
        return measure.alpha / (1.0 - s)
    m1, m2, m3 = _moments(measure, 3)
    k2 = m2 - m1**2
    k3 = m3 - 3 * m1 * m2 + 2 * m1**3
    if abs(s) < 1e-4:
        return m1 + k2 * s + k3 * s**2
    lam, w = measure.nodes()
    lam_lo, lam_hi = lam.min(), lam.max()

    def S(wp):
        return float(np.sum(w / (lam - wp)))

    target = -s
    tol = dict(xtol=1e-13, rtol=4 * np.finfo(float).eps)
    if target > 0:
        # branch below the support: S increasing from 0+ to S(lam_min-)
        lo = lam_lo - 1.0 / target
        while S(lo) > target:
            lo -= 2 * (lam_lo - lo) + 1.0
        hi = lam_lo - 1e-13 * max(1.0, abs(lam_lo)) - 1e-300
        if S(hi) < target:
            raise DomainError("s outside the invertibility range")
        w_star = brentq(lambda wp: S(wp) - target, lo, hi, **tol)
    else:
        # branch above the support: S increasing from -inf to 0-
        hi = lam_hi + 1.0 / abs(target)
        while S(hi) < target:
            hi += 2 * (hi - lam_hi) + 1.0
        lo = lam_hi + 1e-13 * max(1.0, lam_hi)
        if S(lo) > target:
            raise DomainError("s outside the invertibility range")
        w_star = brentq(lambda wp: S(wp) - target, lo, hi, **tol)
    return w_star - 1.0 / s


def integrated_r_transform(measure, t, n_grid=200):
    """J(t) = (1/2) int_0^t R(-u) du."""
    if t < 0:
        raise DomainError("t must be >= 0")
    if isinstance(measure, MarchenkoPastur):
        return 0.5 * measure.alpha * math.log1p(t)
    if t == 0:
        return 0.0
    from .quadrature import gauss_interval

    u, w = gauss_interval(0.0, t, n_grid)
    vals = np.array([r_transform(measure, -ui) for ui in u])
    return 0.5 * float(np.sum(w * vals))


def dual_integrated_r_transform(measure, u):
    """J*(u) = sup_t J(t) - u t / 2."""
    if isinstance(measure, MarchenkoPastur):
        a = measure.alpha
        if not 0 < u <= a:
            raise DomainError("MP J* requires 0 < u <= alpha")
        return 0.5 * a * (math.log(a / u) + u / a - 1.0)
    mean = _expect(measure, lambda lam: lam)
    if not 0 < u <= mean + 1e-12:
        raise DomainError("J* requires 0 < u <= E[lambda]")
    if abs(u - mean) < 1e-12:
        return 0.0
    # stationarity: R(-t*) = u, R(-t) decreasing in t
    hi = 1.0
    while r_transform(measure, -hi) > u:
        hi *= 2
        if hi > 1e12:
            raise DomainError("failed to bracket the Legendre maximiser")
    t_star = brentq(lambda t: r_transform(measure, -t) - u, 0.0, hi, xtol=1e-12)
    return integrated_r_transform(measure, t_star) - 0.5 * u * t_star


def rmt_transforms(measure, gamma=None, s=None, u=None, t=None):
    """Evaluate the spectral transforms requested by keyword."""
    out = {}
    if gamma is not None:
        out["shannon"] = shannon_transform(measure, gamma)
        out["eta"] = eta_transform(measure, gamma)
    if s is not None:
        out["R"] = r_transform(measure, s)
        out["stieltjes"] = stieltjes_transform(
            measure, measure.lam_min_positive() - 1.0
        )
    if t is not None:
        out["J"] = integrated_r_transform(measure, t)
    if u is not None:
        out["J_star"] = dual_integrated_r_transform(measure, u)
    return out
