import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypgraph.curvfunc import HkRoot, Mean, Quotient, eval_f, grad_f, parse_family
from hypgraph.errors import NotInCone
from hypgraph.linop import (
    dF,
    eigen_sandwich_check,
    eval_F,
    eval_G,
    linearize,
    linearize_batch,
    matrix_elementary_symmetric,
    newton_tensors,
)
from hypgraph.rng import SplitMix64
from hypgraph.shape import hyperbolic_shape, principal_curvatures, symmetrize
from hypgraph.verify import sample_states

FAMILIES = [Mean(2), HkRoot(2, 2), Quotient(2, 1, 2), HkRoot(2, 3), HkRoot(3, 3), Quotient(3, 1, 3), parse_family("avg(H1,H2/H1)", 3)]


def random_states(fam, count=200, seed=11):
    return sample_states(fam, SplitMix64(seed), count)


def cap_state(sigma=0.5, d=(0.2, 0.1)):
    d = np.array(d)
    s = math.sqrt(1 - d @ d)
    return hyperbolic_shape(s - sigma, -d / s, -(np.eye(2) / s + np.outer(d, d) / s**3))


class TestMatrixPolynomials:
    def test_elementary_symmetric_matches_characteristic_polynomial(self):
        rng = np.random.default_rng(0)
        a = symmetrize(rng.normal(size=(4, 4)))
        # oracle: numpy.poly gives (-1)^j e_j as coefficients
        coeffs = np.poly(np.linalg.eigvalsh(a))
        want = coeffs * (-1.0) ** np.arange(5)
        np.testing.assert_allclose(matrix_elementary_symmetric(a), want, atol=1e-12)

    def test_newton_tensors_are_derivatives(self):
        rng = np.random.default_rng(1)
        a = symmetrize(rng.normal(size=(3, 3)))
        t = newton_tensors(a)
        step = 1e-6
        for j in range(1, 4):
            for p in range(3):
                for q in range(3):
                    E = np.zeros((3, 3))
                    E[p, q] = 1.0
                    # e_j is a polynomial in the entries, so use the unsymmetrized directional derivative
                    fd = (_e_general(a + step * E, j) - _e_general(a - step * E, j)) / (2 * step)
                    assert fd == pytest.approx(t[j - 1, q, p], abs=1e-8)


def _e_general(a, j):
    """e_j of the eigenvalues of a general matrix: sum of principal j-minors."""
    n = a.shape[0]
    return sum(np.linalg.det(a[np.ix_(c, c)]) for c in itertools.combinations(range(n), j))


class TestDF:
    def test_mean_is_scaled_identity(self):
        a = symmetrize(np.random.default_rng(2).normal(size=(3, 3)))
        np.testing.assert_allclose(dF(Mean(3), a, check=False), np.eye(3) / 3, atol=1e-15)

    @pytest.mark.parametrize("fam", FAMILIES, ids=repr)
    def test_identity_argument(self, fam):
        np.testing.assert_allclose(dF(fam, np.eye(fam.n)), np.eye(fam.n) / fam.n, atol=1e-14)

    @pytest.mark.parametrize("fam", FAMILIES, ids=repr)
    def test_contractions(self, fam):
        u, Du, D2u = random_states(fam, 50)
        for args in zip(u, Du, D2u):
            s = hyperbolic_shape(*args)
            F = dF(fam, s.A)
            fi = grad_f(fam, s.kappa)
            assert np.sum(F * s.A) == pytest.approx(np.sum(fi * s.kappa), abs=1e-10)
            assert np.sum(F * (s.A @ s.A)) == pytest.approx(np.sum(fi * s.kappa**2), abs=1e-10)
            assert np.linalg.eigvalsh(F).min() > 0

    def test_outside_cone(self):
        with pytest.raises(NotInCone):
            dF(HkRoot(2, 2), np.diag([1.0, -1.0]))

    def test_f_of_spectrum(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        a = q @ np.diag([0.5, 1.0, 2.0]) @ q.T
        assert eval_F(HkRoot(3, 3), a) == pytest.approx(eval_f(HkRoot(3, 3), [0.5, 1, 2]), rel=1e-13)


class TestEvalG:
    def test_horosphere(self):
        s = hyperbolic_shape(0.3, np.zeros(2), np.zeros((2, 2)))
        for fam in FAMILIES[:3]:
            assert eval_G(fam, s) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("fam", FAMILIES[:3], ids=repr)
    def test_cap(self, fam):
        assert eval_G(fam, cap_state(0.5)) == pytest.approx(0.5, abs=1e-10)

    def test_scaling_spectrum(self):
        s = cap_state(0.5)
        for c in (0.5, 3.0):
            assert eval_F(HkRoot(2, 2), c * s.A) == pytest.approx(c * eval_G(HkRoot(2, 2), s), rel=1e-12)


class TestLinearize:
    def test_horosphere_mean(self):
        c = 0.4
        lin = linearize(Mean(2), hyperbolic_shape(c, np.zeros(2), np.zeros((2, 2))))
        np.testing.assert_allclose(lin.Gst, c / 2 * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(lin.Gs, 0.0, atol=1e-15)
        assert lin.Gu == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("fam", FAMILIES, ids=repr)
    def test_directional_finite_difference(self, fam):
        u, Du, D2u = random_states(fam, 100, seed=7)
        rng = np.random.default_rng(8)
        n = fam.n
        s = 1e-6
        for args in zip(u, Du, D2u):
            st_ = hyperbolic_shape(*args)
            lin = linearize(fam, st_)
            P = symmetrize(rng.normal(size=(n, n)))
            q = rng.normal(size=n)
            r = rng.normal()

            def G(t):
                return eval_G(fam, hyperbolic_shape(args[0] + t * r, args[1] + t * q, args[2] + t * P))

            fd = (G(s) - G(-s)) / (2 * s)
            pred = lin.apply(P, q, r)
            assert fd == pytest.approx(pred, rel=1e-6, abs=1e-6 * np.linalg.norm(lin.Gst))

    @pytest.mark.parametrize("fam", FAMILIES, ids=repr)
    def test_trace_identity_and_first_order_bound(self, fam):
        u, Du, D2u = random_states(fam, 300, seed=9)
        d = linearize_batch(fam, u, Du, D2u)
        np.testing.assert_allclose(np.sum(d["Gst"] * D2u, axis=(1, 2)), u * d["Gu"], atol=1e-10)
        kap = principal_curvatures(d["A"])
        fi = grad_f(fam, kap)
        bound = d["G"] / d["w"] + 2 / d["w"] * np.trace(d["Fij"], axis1=1, axis2=2) + 2 * np.sum(fi * np.abs(kap), axis=1)
        assert np.all(np.linalg.norm(d["Gs"], axis=1) <= bound)
        assert np.all(principal_curvatures(d["Gst"])[:, 0] > 0)

    def test_batch_matches_pointwise(self):
        fam = HkRoot(2, 3)
        u, Du, D2u = random_states(fam, 20)
        d = linearize_batch(fam, u, Du, D2u)
        for i in range(20):
            lin = linearize(fam, hyperbolic_shape(u[i], Du[i], D2u[i]))
            np.testing.assert_allclose(lin.Gst, d["Gst"][i], atol=1e-14)
            np.testing.assert_allclose(lin.Gs, d["Gs"][i], atol=1e-14)

    @pytest.mark.parametrize("fam", FAMILIES[1:], ids=repr)
    def test_concave_in_hessian(self, fam):
        u, Du, D2u = random_states(fam, 200, seed=12)
        rng = np.random.default_rng(13)
        h = 1e-3
        for args in zip(u, Du, D2u):
            P = symmetrize(rng.normal(size=(fam.n, fam.n)))
            g = [eval_F(fam, hyperbolic_shape(args[0], args[1], args[2] + t * P).A, check=False) for t in (-h, 0, h)]
            assert (g[0] - 2 * g[1] + g[2]) / h**2 <= 1e-6 * np.sum(P * P)


class TestSandwich:
    def test_flat_gradient_is_tight(self):
        s = hyperbolic_shape(0.7, np.zeros(3), symmetrize(np.array([[0.3, 0.1, 0], [0.1, -0.2, 0.05], [0, 0.05, 0.4]])))
        lo, hi = eigen_sandwich_check(HkRoot(2, 3), s)
        assert lo == pytest.approx(0.0, abs=1e-14)
        assert hi == pytest.approx(0.0, abs=1e-14)

    def test_large_gradient(self):
        # |Du| = 1.9, close to the gradient bound for sigma = 0.5
        Du = np.array([1.9 * math.cos(0.4), 1.9 * math.sin(0.4)])
        s = hyperbolic_shape(0.05, Du, np.array([[3.0, 0.5], [0.5, 1.0]]))
        for fam in FAMILIES[:3]:
            lo, hi = eigen_sandwich_check(fam, s)
            assert lo >= -1e-10 and hi >= -1e-10

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(FAMILIES))
    def test_random_states(self, seed, fam):
        u, Du, D2u = random_states(fam, 5, seed=seed)
        for args in zip(u, Du, D2u):
            lo, hi = eigen_sandwich_check(fam, hyperbolic_shape(*args))
            assert lo >= -1e-10 and hi >= -1e-10
