import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings

from bandclt.model import ColorModel, LetterColoring, empirical_theta, support_bound, unit_wigner
from bandclt.poly import PolyFn
from bandclt.series import (
    DegreeOverflowError,
    clt_covariance,
    clt_variance,
    covariance_kernel,
    mean_shift,
    mu_moments,
    phi,
    psi_series,
    shift_kernel,
    theta_series,
)

from conftest import general_models, random_model

F = Fraction
x2 = PolyFn.monomial(2)


class TestPhi:
    def test_catalan(self):
        ph = phi(unit_wigner(), n_max=7)
        assert [ph.coeff(n, 0) for n in range(1, 8)] == [1, 0, 1, 0, 2, 0, 5]

    def test_scaled_kernel(self):
        v = F(7, 3)
        ph = phi(ColorModel.build([1], [[v]]), n_max=5)
        assert ph.coeff(3, 0) == v and ph.coeff(5, 0) == 2 * v * v

    def test_pure_shift(self):
        d = F(-2, 3)
        ph = phi(ColorModel.build([1], [[0]], D=[d]), n_max=6)
        assert [ph.coeff(n, 0) for n in range(1, 7)] == [d ** (n - 1) for n in range(1, 7)]

    @given(general_models())
    @settings(max_examples=8, deadline=None)
    def test_recursion_holds_symbolically(self, model):
        # plug the truncated series back into the closed functional equation
        n = 7
        t = sp.Symbol("t")
        ph = phi(model, n_max=n)
        Phi = [sum(sp.Rational(str(ph.coeff(k, c))) * t**k for k in range(1, n + 1))
               for c in range(model.m)]
        for c in range(model.m):
            A = t / (1 - sp.Rational(str(model.D[c])) * t)
            B = sum(sp.Rational(str(model.s2[c][k] * model.theta[k])) * Phi[k] for k in range(model.m))
            rhs = sp.series(A / (1 - A * B), t, 0, n + 1).removeO()
            assert sp.expand(rhs - Phi[c]) == 0


class TestMoments:
    def test_semicircle(self):
        m = mu_moments(unit_wigner(), n_max=6).moments
        assert m == (1, 0, 1, 0, 2, 0, 5)

    def test_point_masses(self):
        model = ColorModel.build([F(1, 4), F(3, 4)], [[0, 0], [0, 0]], D=[2, -1])
        m = mu_moments(model, n_max=5).moments
        assert m == tuple(F(1, 4) * 2**n + F(3, 4) * (-1) ** n for n in range(6))

    @given(general_models())
    @settings(max_examples=20, deadline=None)
    def test_growth_bound(self, model):
        C = support_bound(model)
        for n, v in enumerate(mu_moments(model, n_max=10).moments):
            assert abs(v) <= C**n

    def test_sigma_consistency(self):
        h = F(1, 3)
        model = ColorModel.build([h, 1 - h], [[F(1, 2), F(5, 4)], [F(5, 4), F(7, 8)]], D=[1, 0])
        limit = mu_moments(model, n_max=6).moments
        gaps = []
        # N = 3k + 1 never hits theta exactly, and theta_N -> theta
        for k in (1, 3, 10, 33, 333, 3333):
            th = empirical_theta(LetterColoring.proportional(model.theta, 3 * k + 1), 2)
            finite = mu_moments(model, sigma=th, n_max=6).moments
            gaps.append(max(abs(float(a - b)) for a, b in zip(finite, limit)))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-2


def _trunc(expr, gens, n):
    """Drop every monomial whose degree in any of ``gens`` exceeds ``n``."""
    poly = sp.Poly(sp.expand(expr), *gens)
    return sum((c * sp.prod([g**e for g, e in zip(gens, mon)])
                for mon, c in poly.terms() if max(mon) <= n), sp.Integer(0))


def _sym_phi(model, n, t):
    """Independent oracle: fixed-point iteration of Phi = A + A B Phi in sympy."""
    R = lambda q: sp.Rational(str(q))
    A = [sum(R(model.D[c]) ** (k - 1) * t**k for k in range(1, n + 1)) for c in range(model.m)]
    Phi = [sp.Integer(0)] * model.m
    for _ in range(n):
        B = [sum(R(model.s2[c][k] * model.theta[k]) * Phi[k] for k in range(model.m))
             for c in range(model.m)]
        Phi = [_trunc(A[c] + A[c] * B[c] * Phi[c], [t], n) for c in range(model.m)]
    return Phi


class TestThetaPsi:
    def test_unit_wigner_low_order(self):
        th = theta_series(unit_wigner(), 4)
        assert th[2, 2] == F(1, 2) and th[1, 1] == 1
        ps = psi_series(unit_wigner(d2=1), 4)
        assert ps[1, 1] == -1
        ps = psi_series(ColorModel.build([1], [[1]], s4=[[5]]), 4)
        assert ps[2, 2] == 1

    def test_zero_kernel(self):
        th = theta_series(ColorModel.build([1], [[0]], D=[1]), 5)
        assert not np.any(th.coeffs != 0)

    def test_gaussian_consistent_psi_vanishes(self, two_color):
        assert not np.any(psi_series(two_color, 6).coeffs != 0)

    @pytest.mark.parametrize("seed", range(4))
    def test_against_log_det(self, seed):
        # sum_r tr(T^r)/r = -log det(I - T), expanded in sympy
        rng = random.Random(seed)
        model = random_model(rng, 1 + seed % 3)
        n = 5
        x, y, s = sp.symbols("x y s")
        R = lambda q: sp.Rational(str(q))
        px = _sym_phi(model, n, x)
        py = [p.subs(x, y) for p in px]
        m = model.m
        T = sp.Matrix(m, m, lambda c, k: R(model.s2[c][k] * model.theta[k]) * px[k] * py[k] * s)
        # -log(1 - L) with L = 1 - det(I - sT), truncated at s^n
        L = sp.expand(1 - (sp.eye(m) - T).det())
        L = _trunc(L, [s, x, y], n)
        ser, power = sp.Integer(0), sp.Integer(1)
        for k in range(1, n + 1):
            power = _trunc(power * L, [s, x, y], n)
            ser += power / k
        ser = sp.expand(ser.subs(s, 1))
        th = theta_series(model, n)
        poly = sp.Poly(ser, x, y)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                assert poly.coeff_monomial(x**i * y**j) == R(th[i, j]), (i, j)

    @given(general_models())
    @settings(max_examples=10, deadline=None)
    def test_symmetric(self, model):
        assert theta_series(model, 6).is_symmetric()
        assert psi_series(model, 6).is_symmetric()

    @given(general_models())
    @settings(max_examples=20, deadline=None)
    def test_kernel_blocks_psd(self, model):
        K = covariance_kernel(model.as_float(), 8).coeffs[1:, 1:].astype(float)
        for b in range(1, 9):
            assert np.linalg.eigvalsh(K[:b, :b]).min() >= -1e-10 * max(1.0, np.abs(K).max())


class TestPredictors:
    def test_examples(self):
        assert clt_variance(unit_wigner(d2=2), PolyFn.monomial(1)) == 2
        assert clt_variance(unit_wigner(d2=1), x2) == 4
        assert clt_variance(unit_wigner(), PolyFn([3])) == 0
        assert mean_shift(unit_wigner(d2=F(7, 2)), x2) == F(5, 2)
        assert mean_shift(unit_wigner(), PolyFn.monomial(3)) == 0

    def test_gaussian_consistent_shift(self, two_color):
        assert mean_shift(two_color, x2) == sum(t * two_color.s2[c][c] for c, t in enumerate(two_color.theta))

    def test_degree_overflow(self):
        with pytest.raises(DegreeOverflowError):
            clt_variance(unit_wigner(), PolyFn.monomial(5), n_max=3)

    @given(general_models())
    @settings(max_examples=10, deadline=None)
    def test_bilinear_and_consistent(self, model):
        f, g = PolyFn([0, 1, 2, F(1, 2)]), PolyFn([1, 0, -1, 0, 3])
        K = covariance_kernel(model, 4)
        assert clt_covariance(model, f, f, kernel=K) == clt_variance(model, f, kernel=K)
        assert clt_covariance(model, f, g, kernel=K) == clt_covariance(model, g, f, kernel=K)
        assert clt_covariance(model, f, g * 3, kernel=K) == 3 * clt_covariance(model, f, g, kernel=K)
        vf, vg = clt_variance(model, f, kernel=K), clt_variance(model, g, kernel=K)
        assert vf >= 0 and clt_covariance(model, f, g, kernel=K) ** 2 <= vf * vg

    @given(general_models())
    @settings(max_examples=8, deadline=None)
    def test_shift_kernel_reuse(self, model):
        S = shift_kernel(model, 5)
        assert S.coeffs.tolist() == (covariance_kernel(model, 5) + theta_series(model, 5).scale(-1)).coeffs.tolist()
        for d in range(1, 6):
            f = PolyFn.monomial(d)
            assert mean_shift(model, f, kernel=S) == mean_shift(model, f, 5)
        with pytest.raises(DegreeOverflowError):
            mean_shift(model, PolyFn.monomial(6), kernel=S)

    def test_parity(self):
        rng = random.Random(3)
        for _ in range(5):
            model = random_model(rng, 2)
            model = ColorModel.build(model.theta, model.s2, D=[0, 0], d2=model.d2, s4=model.s4)
            assert clt_covariance(model, PolyFn.monomial(1), x2) == 0
            assert mean_shift(model, PolyFn.monomial(5)) == 0

    def test_float_mode_matches_exact(self):
        rng = random.Random(9)
        model = random_model(rng, 3)
        f = PolyFn([0, 1, 1, 1])
        assert abs(float(clt_variance(model, f)) - clt_variance(model.as_float(), f)) < 1e-9 * (
            1 + abs(float(clt_variance(model, f))))
