import itertools
import math
import random
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from bandclt.model import ColorModel, LetterColoring, unit_wigner
from bandclt.poly import PiecewisePoly, PolyFn
from bandclt.simulate import (
    EigenError,
    EntryLaw,
    MomentOrderError,
    SimulationReport,
    bootstrap_variance_ci,
    concentration_check,
    eigenvalues,
    exact_expected_trace,
    jacobi_eigenvalues,
    mc_clt,
    mean_shift_check,
    predicted_values,
    replicate_statistics,
    sample_matrix,
    trace_poly,
)

from conftest import random_model

F = Fraction


class TestEntryLaws:
    @pytest.mark.parametrize("kind, v, m4", [("gaussian", 2.0, None), ("three_point", 1.5, 9.0)])
    def test_moments_within_five_se(self, kind, v, m4):
        law = EntryLaw(kind, v, m4)
        xs = law.sample(np.random.default_rng(1), 10**6)
        want = law.moments()
        for k in (1, 2, 3, 4):
            vals = xs**k
            se = vals.std() / math.sqrt(len(xs))
            assert abs(vals.mean() - want[k - 1]) < 5 * se, k

    def test_three_point_needs_fourth(self):
        with pytest.raises(ValueError):
            EntryLaw("three_point", 1.0, 0.5)
        with pytest.raises(ValueError):
            EntryLaw("cauchy", 1.0)


class TestSampling:
    def test_single_letter(self):
        model = ColorModel.build([1], [[1]], D=[5], d2=[0])
        X = sample_matrix(model, LetterColoring.from_blocks([(0, 1)]), seed=3)
        assert X.X.tolist() == [[5.0]]

    def test_symmetric_and_readonly(self, two_color):
        X = sample_matrix(two_color, LetterColoring.from_blocks([(0, 5), (1, 6)]), seed=1)
        assert np.array_equal(X.X, X.X.T)
        with pytest.raises(ValueError):
            X.X[0, 0] = 1.0

    def test_gaussian_refused_for_other_fourth_moments(self):
        model = ColorModel.build([1], [[1]], s4=[[5]])
        col = LetterColoring.from_blocks([(0, 4)])
        with pytest.raises(ValueError, match="three_point"):
            sample_matrix(model, col)
        sample_matrix(model, col, "three_point")

    def test_entry_variances_by_color(self, two_color):
        col = LetterColoring.from_blocks([(0, 100), (1, 100)])
        rng = np.random.default_rng(5)
        acc = np.zeros((200, 200))
        for _ in range(40):
            acc += sample_matrix(two_color, col, seed=rng).X ** 2 * 200
        acc /= 40
        iu = np.triu_indices(100, 1)
        assert abs(acc[:100, :100][iu].mean() - 0.5) < 0.02
        assert abs(acc[:100, 100:].mean() - 1.5) < 0.05


class TestSpectral:
    def test_trace_poly_matches_eigenvalues(self):
        X = sample_matrix(unit_wigner(d2=2), LetterColoring.from_blocks([(0, 30)]), seed=2)
        lam = np.linalg.eigvalsh(X.X)
        f = PolyFn([1, -2, 0.5, 1, 0.25])
        assert abs(trace_poly(X, f) - float(np.sum(f(lam)))) < 1e-9

    def test_jacobi_examples(self):
        assert np.allclose(jacobi_eigenvalues([[2, 1], [1, 2]]), [1, 3])
        assert np.allclose(jacobi_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])
        assert jacobi_eigenvalues(np.zeros((0, 0))).size == 0

    @pytest.mark.parametrize("n", [5, 20, 50])
    def test_jacobi_against_lapack(self, n):
        A = np.random.default_rng(n).standard_normal((n, n))
        A = A + A.T
        assert np.allclose(eigenvalues(A, "jacobi"), eigenvalues(A, "lapack"), atol=1e-10)

    def test_jacobi_reports_non_convergence(self):
        A = np.random.default_rng(0).standard_normal((20, 20))
        with pytest.raises(EigenError):
            jacobi_eigenvalues(A + A.T, max_sweeps=1)

    def test_semicircle_law_of_large_numbers(self):
        X = sample_matrix(unit_wigner(d2=2), LetterColoring.from_blocks([(0, 400)]), seed=11)
        lam = eigenvalues(X, "lapack")
        assert abs(np.mean(lam**2) - 1) < 0.02
        assert abs(np.mean(lam**4) - 2) < 0.05
        assert lam.max() < 2.2


def brute_expected_trace(model, coloring, n, diag_fourth):
    """E trace X^n by summing over every closed index tuple."""
    N, col = coloring.N, coloring.colors

    def noise_moment(i, j, k):
        if k % 2:
            return 0
        if k == 0:
            return 1
        if i == j:
            return {2: model.d2[col[i]], 4: diag_fourth[col[i]]}[k]
        return {2: model.s2[col[i]][col[j]], 4: model.s4[col[i]][col[j]]}[k]

    total = F(0)
    for idx in itertools.product(range(N), repeat=n):
        counts = {}
        for s in range(n):
            a, b = idx[s], idx[(s + 1) % n]
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
        term = F(1)
        for (a, b), k in counts.items():
            if a == b:
                D = model.D[col[a]]
                term *= sum(comb(k, j) * D ** (k - j) * noise_moment(a, a, j) * F(1, N) ** F(j, 2)
                            for j in range(0, k + 1, 2))
            else:
                term *= noise_moment(a, b, k) * F(1, N ** (k // 2))
        total += term
    return total


class TestExactTrace:
    @pytest.mark.parametrize("seed", range(6))
    def test_against_tuple_sum(self, seed):
        rng = random.Random(seed)
        model = random_model(rng, 2)
        diag_fourth = [3 * d * d for d in model.d2]
        for N in (1, 2, 3, 4):
            col = LetterColoring.from_profile(N, [(F(1, 2), 0), (1, 1)])
            assert exact_expected_trace(model, col, 0) == N
            for n in range(1, 5):
                got = exact_expected_trace(model, col, n, diag_fourth)
                assert got == brute_expected_trace(model, col, n, diag_fourth), (N, n)

    def test_unit_wigner_values(self):
        col = LetterColoring.from_blocks([(0, 5)])
        vals = [exact_expected_trace(unit_wigner(d2=2), col, n, [12]) for n in range(5)]
        assert vals == [5, 0, 6, 0, 16]

    def test_fourth_moment_needed(self):
        with pytest.raises(MomentOrderError):
            exact_expected_trace(unit_wigner(d2=2), LetterColoring.from_blocks([(0, 3)]), 4)
        exact_expected_trace(unit_wigner(d2=0), LetterColoring.from_blocks([(0, 3)]), 4)

    def test_limits(self):
        with pytest.raises(ValueError):
            exact_expected_trace(unit_wigner(), LetterColoring.from_blocks([(0, 3)]), 5)
        with pytest.raises(ValueError):
            exact_expected_trace(unit_wigner(), LetterColoring.from_blocks([(0, 65)]), 2)

    def test_mean_shift_x2(self, two_color):
        for N in (2, 5, 9):
            col = LetterColoring.proportional(two_color.theta, N)
            chk = mean_shift_check(two_color, col, PolyFn.monomial(2))
            assert chk.exact_shift == chk.predicted_at_theta_N


class TestMonteCarlo:
    def test_r_too_small(self):
        with pytest.raises(ValueError, match="R too small"):
            mc_clt(unit_wigner(d2=2), None, PolyFn.monomial(1), N=10, R=50)

    def test_worker_count_does_not_change_results(self):
        col = LetterColoring.from_blocks([(0, 12)])
        fs = [PolyFn.monomial(2), PiecewisePoly.clamp(-1, 1)]
        a, _ = replicate_statistics(unit_wigner(d2=2), col, fs, 24, seed=4, workers=1)
        b, _ = replicate_statistics(unit_wigner(d2=2), col, fs, 24, seed=4, workers=3)
        assert np.array_equal(a, b)

    def test_report_round_trip_and_determinism(self):
        r1 = mc_clt(unit_wigner(d2=2), None, PolyFn.monomial(1), N=20, R=200, seed=9, n_boot=300)
        r2 = mc_clt(unit_wigner(d2=2), None, PolyFn.monomial(1), N=20, R=200, seed=9, n_boot=300)
        assert r1.fingerprint() == r2.fingerprint()
        back = SimulationReport.from_json(r1.to_json())
        assert back.fingerprint() == r1.fingerprint()
        assert back.recompute_ci() == (r1.ci_low, r1.ci_high, r1.se)
        assert r1.predicted_variance == 2.0
        assert r1.ci_low <= r1.variance <= r1.ci_high

    def test_bootstrap_ci_covers_normal_variance(self):
        x = np.random.default_rng(0).standard_normal(2000) * 3
        lo, hi, se = bootstrap_variance_ci(x, seed=1, n_boot=1000)
        assert lo < 9 < hi and 0 < se < 1

    def test_predictions(self):
        assert predicted_values(unit_wigner(d2=2), PolyFn.monomial(3)) == (24.0, 0.0)
        v, m = predicted_values(unit_wigner(d2=2), PiecewisePoly.clamp(-1, 1))
        assert 0 < v < 2 and m is None
        assert predicted_values(ColorModel.build([1], [[1]], D=[1]), PiecewisePoly.clamp(-1, 1)) == (None, None)

    def test_concentration_small(self):
        table = concentration_check(unit_wigner(d2=2), PiecewisePoly.clamp(-1, 1), [20, 40], R=100,
                                    n_boot=200)
        assert [r.N for r in table.rows] == [20, 40]
        assert all(r.ci_low <= r.variance <= r.ci_high for r in table.rows)
