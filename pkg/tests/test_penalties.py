import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from treeamp.penalties import GroupL21Penalty, L1Penalty, soft_threshold


class TestL1:
    def test_analytic_soft_threshold(self):
        pen = L1Penalty(strength=1.0, size=(3,))
        A, r, v = pen.posterior(1.0, np.array([2.0, 0.5, -3.0]))
        np.testing.assert_allclose(r, [1.0, 0.0, -2.0])
        assert v == pytest.approx(2.0 / 3.0)

    def test_penalty_off(self):
        pen = L1Penalty(strength=0.0, size=(4,))
        b = np.array([0.3, -1.0, 2.0, 0.0])
        A, r, v = pen.posterior(2.0, b)
        np.testing.assert_allclose(r, b / 2.0)
        assert v == pytest.approx(0.5)

    def test_tie_breaks_toward_zero(self):
        pen = L1Penalty(strength=1.0, size=(1,))
        _, r, _ = pen.posterior(1.0, np.array([1.0]))
        assert r[0] == 0.0

    def test_moreau_identity(self):
        # A + a * M_{(lam/a)|.|}(b/a) = |b|^2 / 2a exactly
        pen = L1Penalty(strength=0.7, size=(5,))
        rng = np.random.default_rng(0)
        b, a = rng.normal(size=5), 1.7
        A, _, _ = pen.posterior(a, b)
        kappa = 0.7 / a
        u = b / a
        env = np.where(np.abs(u) <= kappa, 0.5 * u**2, kappa * np.abs(u) - 0.5 * kappa**2)
        assert A + a * env.sum() == pytest.approx(np.sum(b**2) / (2 * a), abs=1e-12)

    def test_gradient_of_A_is_r(self):
        pen = L1Penalty(strength=0.9, size=(6,))
        rng = np.random.default_rng(1)
        b = rng.normal(size=6) * 2
        # keep away from kinks
        b = b + 0.3 * np.sign(b)
        a = 1.3
        A, r, _ = pen.posterior(a, b)
        h = 1e-6
        for i in range(6):
            bp, bm = b.copy(), b.copy()
            bp[i] += h
            bm[i] -= h
            d = (pen.posterior(a, bp)[0] - pen.posterior(a, bm)[0]) / (2 * h)
            assert d == pytest.approx(r[i], abs=1e-5)


class TestGroupL21:
    def test_dead_zone(self):
        pen = GroupL21Penalty(strength=2.0, size=(2, 3))
        b = np.array([[0.5, 3.0, 0.1], [0.5, 4.0, 0.1]])
        _, r, _ = pen.posterior(1.0, b)
        np.testing.assert_allclose(r[:, 0], 0.0)
        np.testing.assert_allclose(r[:, 2], 0.0)
        assert np.linalg.norm(r[:, 1]) > 0

    def test_shrinks_norm_not_direction(self):
        pen = GroupL21Penalty(strength=1.0, size=(3, 1))
        b = np.array([[3.0], [0.0], [4.0]])
        _, r, _ = pen.posterior(1.0, b)
        norm = np.linalg.norm(b)
        np.testing.assert_allclose(r, b * (1 - 1.0 / norm), atol=1e-12)

    def test_d1_reduces_to_l1(self):
        rng = np.random.default_rng(2)
        b = rng.normal(size=8)
        g = GroupL21Penalty(strength=0.8, size=(1, 8))
        l = L1Penalty(strength=0.8, size=(8,))
        Ag, rg, vg = g.posterior(1.4, b.reshape(1, 8))
        Al, rl, vl = l.posterior(1.4, b)
        np.testing.assert_allclose(rg.ravel(), rl)
        assert vg == pytest.approx(vl)
        assert Ag == pytest.approx(Al)

    def test_gradient_of_A_is_r(self):
        pen = GroupL21Penalty(strength=0.6, size=(2, 4))
        rng = np.random.default_rng(3)
        b = rng.normal(size=(2, 4)) * 2
        a = 0.9
        A, r, _ = pen.posterior(a, b)
        h = 1e-6
        for i in range(2):
            for j in range(4):
                bp, bm = b.copy(), b.copy()
                bp[i, j] += h
                bm[i, j] -= h
                d = (pen.posterior(a, bp)[0] - pen.posterior(a, bm)[0]) / (2 * h)
                assert d == pytest.approx(r[i, j], abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(
    b1=arrays(np.float64, 6, elements=st.floats(-10, 10)),
    b2=arrays(np.float64, 6, elements=st.floats(-10, 10)),
    a=st.floats(0.1, 10.0),
    lam=st.floats(0.0, 5.0),
)
def test_prox_firmly_nonexpansive(b1, b2, a, lam):
    pen = L1Penalty(strength=lam, size=(6,))
    _, r1, _ = pen.posterior(a, b1)
    _, r2, _ = pen.posterior(a, b2)
    assert np.linalg.norm(r1 - r2) <= np.linalg.norm(b1 - b2) / a + 1e-12


@settings(max_examples=50, deadline=None)
@given(
    u=arrays(np.float64, (2, 5), elements=st.floats(-8, 8)),
    lam=st.floats(0.0, 4.0),
)
def test_group_prox_nonexpansive(u, lam):
    pen = GroupL21Penalty(strength=lam, size=(2, 5))
    _, r1, _ = pen.posterior(1.0, u)
    _, r2, _ = pen.posterior(1.0, np.zeros((2, 5)))
    assert np.linalg.norm(r1 - r2) <= np.linalg.norm(u) + 1e-12
