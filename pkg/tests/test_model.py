import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bandclt._numeric import ExactModeError, exact_sqrt, format_number, parse_number, to_exact
from bandclt.model import (
    ColorModel,
    LetterColoring,
    ModelError,
    empirical_theta,
    support_bound,
    unit_wigner,
    validate_model,
    wigner_condition,
    wishart_model,
    wishart_params,
)

from conftest import general_models

F = Fraction


class TestNumeric:
    def test_decimal_strings_are_exact(self):
        assert to_exact("0.1") == F(1, 10)
        assert to_exact(0.1) == F(1, 10)
        assert to_exact("3/4") == F(3, 4)

    def test_exact_sqrt(self):
        assert exact_sqrt(F(9, 4)) == F(3, 2)
        with pytest.raises(ExactModeError):
            exact_sqrt(F(2))

    @given(st.fractions())
    def test_format_round_trip(self, q):
        assert parse_number(format_number(q)) == q


class TestValidate:
    def test_scalar_wigner_is_valid(self):
        m = ColorModel.build([1], [[1]], D=[0], d2=[1], s4=[[3]])
        assert validate_model(m) == []

    def test_fourth_moment_below_square(self):
        m = ColorModel.build([1], [[1]], s4=[[F(1, 2)]])
        problems = validate_model(m)
        assert len(problems) == 1 and "s4 < s2^2" in problems[0]

    def test_theta_sum(self):
        m = ColorModel.build([F(6, 10), F(5, 10)], [[1, 1], [1, 1]])
        assert any("theta sums to 11/10" in p for p in validate_model(m))

    def test_theta_sum_float(self):
        m = ColorModel.build([0.6, 0.5], [[1, 1], [1, 1]])
        assert any("theta sums to 1.1" in p for p in validate_model(m))

    def test_asymmetric_and_negative(self):
        m = ColorModel.build([F(1, 2), F(1, 2)], [[1, 2], [1, 1]], d2=[-1, 0])
        problems = " ".join(validate_model(m))
        assert "symmetric" in problems and "negative" in problems

    def test_shape_errors(self):
        with pytest.raises(ModelError):
            ColorModel.build([1], [[1, 2]])
        with pytest.raises(ModelError):
            ColorModel.build([], [])

    def test_modes_do_not_mix(self):
        assert ColorModel.build([1], [[1]]).exact
        assert not ColorModel.build([1], [[1.0]]).exact
        m = ColorModel.build([1], [[1]]).as_float()
        assert all(isinstance(v, float) for v in m.theta + m.D + m.d2)


class TestSupportBound:
    @pytest.mark.parametrize(
        "D, s2, expected",
        [([0], [[1]], 2), ([1], [[4]], 6), ([-3], [[0]], 6)],
    )
    def test_examples(self, D, s2, expected):
        assert support_bound(ColorModel.build([1], s2, D=D)) == expected

    @given(general_models())
    @settings(max_examples=30, deadline=None)
    def test_positive_unless_trivial(self, model):
        trivial = all(v == 0 for v in model.D) and all(v == 0 for r in model.s2 for v in r)
        assert (support_bound(model) > 0) != trivial


class TestWignerCondition:
    def test_examples(self):
        assert wigner_condition(ColorModel.build([1], [[1]], D=[0]))
        h = F(1, 2)
        assert wigner_condition(ColorModel.build([h, h], [[0, 2], [2, 0]], D=[0, 0]))
        assert not wigner_condition(ColorModel.build([1.0], [[1.0]], D=[0.1]))

    def test_float_tolerance(self):
        m = ColorModel.build([0.5, 0.5], [[0.5, 1.5 + 1e-14], [1.5 + 1e-14, 0.5]])
        assert wigner_condition(m)
        m = ColorModel.build([0.5, 0.5], [[0.5, 1.5 + 1e-9], [1.5 + 1e-9, 0.5]])
        assert not wigner_condition(m)


class TestColoring:
    @pytest.mark.parametrize(
        "blocks, expected",
        [
            ([(0, 2), (1, 2)], [F(1, 2), F(1, 2)]),
            ([(0, 1), (1, 3)], [F(1, 4), F(3, 4)]),
            ([(0, 5)], [F(1)]),
        ],
    )
    def test_empirical_theta(self, blocks, expected):
        col = LetterColoring.from_blocks(blocks)
        assert list(empirical_theta(col)) == expected
        assert sum(empirical_theta(col)) == 1

    def test_profile(self):
        col = LetterColoring.from_profile(6, [(F(1, 3), 0), (1, 1)])
        assert col.colors == (0, 0, 1, 1, 1, 1)

    def test_proportional_counts(self):
        col = LetterColoring.proportional([F(1, 3), F(2, 3)], 10)
        assert col.N == 10
        assert empirical_theta(col, 2) == (F(3, 10), F(7, 10))

    @given(st.lists(st.integers(1, 20), min_size=1, max_size=4), st.integers(1, 6))
    def test_refining_blocks_keep_proportions(self, counts, k):
        col = LetterColoring.from_blocks([(c, n * k) for c, n in enumerate(counts)])
        total = sum(counts)
        assert empirical_theta(col) == tuple(F(n, total) for n in counts)

    def test_bad_color(self):
        with pytest.raises(ModelError):
            LetterColoring.from_blocks([(0, 2), (3, 1)]).check(2)


class TestWishart:
    def test_parameters(self):
        p = wishart_params(F(1, 5))
        assert (p.alpha, p.beta, p.gamma) == (2, F(1, 2), F(5, 2))
        p = wishart_params(F(1, 2))
        assert (p.alpha, p.beta, p.gamma) == (1, 1, 2)

    def test_reject_large_theta(self):
        with pytest.raises(ModelError, match="thetaA must be <= 1/2"):
            wishart_model(F(6, 10))
        with pytest.raises(ModelError):
            wishart_model(0)

    def test_constant_kernel_must_be_gamma(self):
        # the only constant cross kernel meeting both row sums is gamma
        model, p = wishart_model(F(1, 2))
        assert model.s2[0][1] == 2 == p.gamma
        with pytest.raises(ModelError, match="row sum"):
            wishart_model(F(1, 2), s2AB=1)

    def test_irrational_ratio_goes_float(self):
        model, p = wishart_model(F(1, 3))
        assert not model.exact
        assert math.isclose(p.alpha, math.sqrt(2))

    def test_split_blocks(self):
        # A = two atoms, cross kernel rows chosen to keep both row sums
        tA = F(1, 5)
        model, p = wishart_model(tA, s2AB=[[2, 3], [3, 2]], weightsA=[F(1, 10), F(1, 10)],
                                 weightsB=[F(2, 5), F(2, 5)])
        assert validate_model(model) == []
        assert p.block_a == (0, 1) and p.block_b == (2, 3)
        with pytest.raises(ModelError):
            wishart_model(tA, s2AB=[[1, 4], [3, 2]], weightsA=[F(1, 10), F(1, 10)],
                          weightsB=[F(2, 5), F(2, 5)])

    @given(st.sampled_from([F(1, 2), F(1, 5), F(1, 10), F(1, 17), F(4, 13)]))
    def test_valid_and_not_wigner(self, tA):
        model, p = wishart_model(tA)
        assert validate_model(model) == []
        assert p.alpha >= 1 >= p.beta and p.gamma >= 2
        # the only exception is gamma = 2, where the cross row sums are 1
        assert wigner_condition(model) == (p.gamma == 2)

    def test_hash_stable(self):
        assert unit_wigner().hash() == unit_wigner().hash()
        assert unit_wigner().hash() != unit_wigner(d2=1).hash()
