import numpy as np
import pytest

from treeamp.errors import DivergentTilt
from treeamp.priors import (
    BinaryPrior,
    GaussBernoulliPrior,
    GaussianPrior,
    IntervalPrior,
)

ALL_SYMMETRIC = [
    GaussianPrior(mean=0.0, var=1.0),
    BinaryPrior(p_pos=0.5),
    GaussBernoulliPrior(rho=0.5, mean=0.0, var=1.0),
]


class TestPosterior:
    def test_gaussian_prior_only(self):
        p = GaussianPrior(mean=0.0, var=1.0, size=(5,))
        A, r, v = p.posterior(0.0, np.zeros(5))
        np.testing.assert_allclose(r, 0.0)
        assert v == pytest.approx(1.0)
        assert p.message() == (1.0, 0.0)

    def test_gauss_bernoulli_symmetry(self):
        p = GaussBernoulliPrior(rho=0.5, size=(4,))
        _, r, _ = p.posterior(1.0, np.zeros(4))
        np.testing.assert_allclose(r, 0.0)

    def test_binary_tanh(self):
        p = BinaryPrior(p_pos=0.5, size=(3,))
        A, r, v = p.posterior(1.0, np.full(3, 2.0))
        np.testing.assert_allclose(r, np.tanh(2.0))
        # the quadratic tilt contributes exactly -a_in/2 per component
        A0, _, _ = p.posterior(0.0, np.full(3, 2.0))
        assert A == pytest.approx(A0 - 3 * 0.5)

    def test_variance_monotone_in_precision(self):
        priors = [
            GaussianPrior(size=(6,)),
            GaussBernoulliPrior(rho=0.5, size=(6,)),
            IntervalPrior(0.0, np.inf, size=(6,)),
        ]
        for p in priors:
            rng = np.random.default_rng(3)
            b = rng.normal(size=6)
            vs = [p.posterior(a, b)[2] for a in [0.1, 0.5, 1.0, 3.0, 10.0]]
            assert all(v1 > v2 for v1, v2 in zip(vs, vs[1:]))
        # binary support is {-1,+1}: the quadratic tilt is flat, variance constant
        p = BinaryPrior(size=(6,))
        b = np.random.default_rng(3).normal(size=6)
        vs = [p.posterior(a, b)[2] for a in [0.1, 1.0, 10.0]]
        assert all(v1 >= v2 for v1, v2 in zip(vs, vs[1:]))


class TestTeacherMoments:
    def test_gauss_bernoulli_mixture_moment(self):
        p = GaussBernoulliPrior(rho=0.05, mean=0.0, var=1.0)
        assert p.teacher_tau(0.0) == pytest.approx(0.05, abs=1e-12)

    def test_gaussian_unit(self):
        assert GaussianPrior(0.0, 1.0).teacher_tau(0.0) == pytest.approx(1.0)
        # tilted: variance shrinks to v0/(1+tau_hat*v0)
        assert GaussianPrior(0.0, 1.0).teacher_tau(1.0) == pytest.approx(0.5)

    def test_binary_unit(self):
        assert BinaryPrior(0.5).teacher_tau(0.0) == pytest.approx(1.0)
        assert BinaryPrior(0.5).teacher_tau(3.7) == pytest.approx(1.0)

    def test_divergent_tilt(self):
        with pytest.raises(DivergentTilt):
            GaussianPrior(0.0, 1.0).teacher_components(-1.5)
        with pytest.raises(DivergentTilt):
            GaussianPrior(0.0, 1.0).scalar_posterior(-1.5, np.zeros(1))

    def test_teacher_A0_derivative_gives_tau(self):
        # tau = -2 dA0/dtau_hat by central differences
        for p in ALL_SYMMETRIC + [IntervalPrior(-0.3, 1.7, mean=0.2, var=0.8)]:
            h = 1e-6
            for th in [0.0, 0.8]:
                d = (p.teacher_A0(th + h) - p.teacher_A0(th - h)) / (2 * h)
                assert -2 * d == pytest.approx(p.teacher_tau(th), rel=1e-6)


class TestRSPotential:
    def test_uninformative_messages(self):
        for p in ALL_SYMMETRIC:
            out = p.rs_quantities(0.0, 0.0, 0.5, 0.5)
            assert out["m"] == pytest.approx(0.0, abs=1e-12)
            assert out["q"] == pytest.approx(0.0, abs=1e-12)

    def test_nishimori_condition(self):
        for p in ALL_SYMMETRIC:
            out = p.rs_quantities(1.3, 1.3, 0.4, 0.4)
            assert out["m"] == pytest.approx(out["q"], abs=1e-9)
            tau0 = p.teacher_tau(0.4)
            assert out["tau"] == pytest.approx(tau0, abs=1e-9)

    def test_monte_carlo_oracle(self):
        p = GaussBernoulliPrior(rho=0.5)
        m_hat = q_hat = 1.0
        out = p.rs_quantities(m_hat, q_hat, 0.0, 0.0)
        rng = np.random.default_rng(11)
        n = 2_000_000
        x0 = p.sample(rng, n)
        b = m_hat * x0 + np.sqrt(q_hat) * rng.normal(size=n)
        mom = p.scalar_posterior(q_hat + 0.0, b)
        m_mc = (x0 * mom.r).mean()
        se = (x0 * mom.r).std() / np.sqrt(n)
        assert out["m"] == pytest.approx(m_mc, abs=max(1e-3, 4 * se))

    def test_matched_rs_equals_bo(self):
        for p in ALL_SYMMETRIC:
            for m_hat in [0.3, 2.0]:
                rs = p.rs_quantities(m_hat, m_hat, 0.7, 0.7)
                bo = p.bo_quantities(m_hat, 0.7)
                assert rs["A"] == pytest.approx(bo["A"], abs=1e-8)
                assert rs["v"] == pytest.approx(bo["v"], abs=1e-10)


class TestBOPotential:
    def test_no_information(self):
        for p in ALL_SYMMETRIC:
            out = p.bo_quantities(0.0, 0.0)
            assert out["v"] == pytest.approx(p.teacher_tau(0.0), abs=1e-10)
            assert out["m"] == pytest.approx(0.0, abs=1e-10)

    def test_perfect_information_limit(self):
        for p in ALL_SYMMETRIC:
            out = p.bo_quantities(1e8, 0.0)
            assert out["v"] == pytest.approx(0.0, abs=1e-6)
            assert out["m"] == pytest.approx(p.teacher_tau(0.0), abs=1e-6)

    def test_gaussian_closed_form(self):
        p = GaussianPrior(0.0, 1.0)
        out = p.bo_quantities(1.0, 0.0)
        assert out["v"] == pytest.approx(0.5, abs=1e-12)
        assert out["m"] == pytest.approx(0.5, abs=1e-12)

    def test_i_mmse_relation(self):
        h = 1e-4
        for p in ALL_SYMMETRIC:
            for m_hat in [0.5, 2.0]:
                dI = (
                    p.mutual_information(m_hat + h, 0.0)
                    - p.mutual_information(m_hat - h, 0.0)
                ) / (2 * h)
                v = p.bo_quantities(m_hat, 0.0)["v"]
                assert dI == pytest.approx(0.5 * v, rel=1e-4)

    def test_overlap_is_potential_gradient(self):
        h = 1e-4
        for p in ALL_SYMMETRIC:
            dA = (
                p.bo_quantities(1.0 + h, 0.0)["A"] - p.bo_quantities(1.0 - h, 0.0)["A"]
            ) / (2 * h)
            m = p.bo_quantities(1.0, 0.0)["m"]
            assert dA == pytest.approx(0.5 * m, rel=1e-4)

    def test_interval_prior_bo(self):
        # positive prior against a brute-force Monte-Carlo estimate
        p = IntervalPrior(0.0, np.inf, mean=0.0, var=1.0)
        out = p.bo_quantities(1.0, 0.0)
        rng = np.random.default_rng(5)
        n = 1_000_000
        x0 = p.sample(rng, n)
        b = x0 + rng.normal(size=n)
        mom = p.scalar_posterior(1.0, b)
        v_mc = mom.v.mean() + 0.0
        assert out["v"] == pytest.approx(v_mc, abs=4 * mom.v.std() / np.sqrt(n) + 1e-4)
