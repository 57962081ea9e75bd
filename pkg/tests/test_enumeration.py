import itertools
from collections import Counter

import pytest

from bandclt.enumeration import (
    CapExceededError,
    canonical_words,
    compositions,
    constructive_clt_pairs,
    count_clt_pairs,
    count_fk_classes,
    enumerate_classes,
    enumerate_sentences,
    enumerate_words,
    fk_extension_classes,
)
from bandclt.words import (
    WordClass,
    bracelet,
    canonicalize,
    classify_word,
    fk_bound_count,
    graph,
    polarization_count,
    weight,
)


def all_words(length):
    """Independent oracle: filter every word over ``length`` letters."""
    seen = set()
    for w in itertools.product(range(1, length + 1), repeat=length):
        seen.add(canonicalize(w))
    return seen


class TestGenerator:
    @pytest.mark.parametrize("L", range(1, 7))
    def test_restricted_growth_matches_product(self, L):
        # Bell numbers: every class appears exactly once
        got = list(canonical_words(L))
        assert len(got) == len(set(got)) == len(all_words(L))

    @pytest.mark.parametrize("kind", ["closed", "weak_wigner", "wigner", "critical", "fk"])
    @pytest.mark.parametrize("L", range(1, 7))
    def test_pruned_kinds_match_filtering(self, kind, L):
        from bandclt.enumeration import iter_predicate
        from bandclt.words import is_fk_word

        pred = {
            "closed": lambda w: w[0] == w[-1],
            "fk": is_fk_word,
        }.get(kind, iter_predicate(kind))
        expect = sorted(w for w in all_words(L) if pred(w))
        assert sorted(enumerate_words(L, kind)) == expect

    def test_sentences_match_filtering(self):
        from bandclt.enumeration import SENTENCE_KINDS

        for shape in [(3, 3), (2, 4), (4, 3), (3, 2, 3)]:
            # unpruned restricted-growth strings (checked against product above), then split
            cuts = [sum(shape[:i]) for i in range(len(shape) + 1)]
            every = {tuple(flat[cuts[i]:cuts[i + 1]] for i in range(len(shape)))
                     for flat in canonical_words(sum(shape))}
            for kind, pred in SENTENCE_KINDS.items():
                expect = sorted(a for a in every if pred(a))
                assert sorted(enumerate_sentences(shape, kind)) == expect, (shape, kind)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            enumerate_classes(15, "wigner")

    def test_compositions(self):
        assert list(compositions(4, 2)) == [(1, 3), (2, 2), (3, 1)]
        assert list(compositions(5, 2, 2)) == [(2, 3), (3, 2)]


class TestCounts:
    def test_wigner_examples(self):
        assert enumerate_classes(7, "wigner")[0] == 5
        assert enumerate_classes(5, "wigner")[0] == 2
        assert enumerate_classes(4, "wigner")[0] == 0

    def test_fk_generating_function(self):
        assert [count_fk_classes(n) for n in range(1, 6)] == [1, 1, 2, 3, 6]
        for n in range(1, 11):
            assert count_fk_classes(n) == enumerate_classes(n, "fk")[0]
            assert count_fk_classes(n) <= 2 ** (n - 1)

    def test_fk_bound_on_weak_wigner(self):
        L = 7
        by_weight = Counter(weight(w) for w in enumerate_words(L, "weak_wigner"))
        assert by_weight[3] <= fk_bound_count(6, 3)

    def test_clt_pair_examples(self):
        assert count_clt_pairs(3, 2) == 0
        assert count_clt_pairs(3, 3) == count_clt_pairs(3, 3, "constructive") == 2
        assert count_clt_pairs(4, 4) == count_clt_pairs(4, 4, "constructive")

    @pytest.mark.parametrize("total", range(4, 11))
    def test_constructive_weights_sum_to_one(self, total):
        for l1 in range(2, total - 1):
            l2 = total - l1
            cons = constructive_clt_pairs(l1, l2)
            brute = set(enumerate_sentences((l1, l2), "clt_pair"))
            assert set(cons) == brute
            assert all(v == 1 for v in cons.values())
            assert count_clt_pairs(l1, l2, "constructive") == len(brute)


class TestStructure:
    """Structural facts checked on every enumerated instance (small lengths here;
    the acceptance module goes to total length 12)."""

    def test_weak_wigner_weight_gap(self):
        for L in range(1, 10):
            for w in enumerate_words(L, "weak_wigner"):
                k = weight(w)
                assert 2 * k <= L + 1
                assert (2 * k == L + 1) == (classify_word(w) is WordClass.WIGNER)
                assert not (L - 1 < 2 * k < L + 1)

    def test_polarization_counts(self):
        seen_r = set()
        for total in range(4, 11):
            for l1 in range(2, total - 1):
                for pair in enumerate_sentences((l1, total - l1), "clt_pair"):
                    r = bracelet(pair).circuit_length
                    seen_r.add(r)
                    assert polarization_count(pair) == (4 if r == 2 else r)
        assert 3 in seen_r

    def test_critical_words_have_bracelets(self):
        for L in (5, 7, 9):
            for w in enumerate_words(L, "critical"):
                assert classify_word(w) is WordClass.CRITICAL_WEAK_WIGNER
                info = bracelet(w)
                g = graph(w)
                if g.is_tree():
                    assert info.circuit_length == 2
                else:
                    assert all(g.visits[e] == 2 for e in info.bracelet_edges)

    def test_fk_extension_bound(self):
        fk_words = {L: enumerate_words(L, "fk") for L in range(1, 6)}
        checked = 0
        for Lb in range(1, 6):
            for b in fk_words[Lb]:
                for Lc in range(1, 10 - Lb + 1):
                    for c in fk_words.get(Lc, []):
                        n = len(fk_extension_classes((b,), c))
                        assert n <= weight(b) ** 2
                        checked += 1
        assert checked > 50

    def test_fk_extension_independent_oracle(self):
        # compare with filtering all FK sentences of the shape
        b, c = (1, 2, 1), (1, 2)
        direct = {a for a in enumerate_sentences((3, 2), "fk_sentence")
                  if canonicalize(a[0]) == b and canonicalize(a[1]) == c}
        assert fk_extension_classes((b,), c) == direct
