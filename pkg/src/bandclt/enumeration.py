"""Brute-force enumeration of word and sentence equivalence classes.

Classes are represented by restricted-growth (first-occurrence) labelings,
generated directly: the next letter is either an already used letter or the
next fresh one.  Structural pruning (closure, edge-visit budgets, forest
shape) keeps the search small; no pruning rule relies on a statement the
enumeration is later used to check.
"""

from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from .words import (
    SentenceClass,
    WordClass,
    canonicalize,
    classify_sentence,
    classify_word,
    edge,
    is_fk_sentence,
    rotations,
)

DEFAULT_CAP = 14


class CapExceededError(ValueError):
    """The requested total length is above the configured enumeration cap."""


def canonical_sentences(
    lengths: Sequence[int],
    closed: bool = False,
    min_edge_visits: int = 1,
    max_edge_visits: Optional[int] = None,
    max_weight: Optional[int] = None,
    forest: bool = False,
    chained: bool = False,
) -> Iterator[tuple]:
    """Yield every canonical sentence with the given word lengths.

    closed           every word ends with its first letter
    min_edge_visits  every edge is visited at least this often (jointly)
    max_edge_visits  no edge is visited more often than this
    max_weight       at most this many distinct letters
    forest           never close a cycle or use a degenerate edge
    chained          each word after the first starts on an already used letter
    """
    lengths = list(lengths)
    if any(L < 1 for L in lengths):
        raise ValueError("word lengths must be positive")
    total = sum(lengths)
    # per flat position: (word index, is first letter, is last letter)
    layout = []
    for wi, L in enumerate(lengths):
        for j in range(L):
            layout.append((wi, j == 0, j == L - 1))
    steps_after = [0] * (total + 1)
    for p in range(total - 1, -1, -1):
        steps_after[p] = steps_after[p + 1] + (0 if layout[p][2] else 1)
    seq = [0] * total
    counts: Counter = Counter()
    state = {"k": 0, "once": 0}
    # adjacency for forest checks: letter -> set of neighbours
    adj: dict = {}

    def emit():
        out, pos = [], 0
        for L in lengths:
            out.append(tuple(seq[pos:pos + L]))
            pos += L
        return tuple(out)

    def rec(p: int, word_start_letter: int):
        if p == total:
            if min_edge_visits > 1 and state["once"] > 0:
                return
            if min_edge_visits > 2 and any(v < min_edge_visits for v in counts.values()):
                return
            yield emit()
            return
        wi, first, last = layout[p]
        k = state["k"]
        if first:
            cands = range(1, k + 1) if (chained and p > 0) else range(1, k + 2)
        elif last and closed:
            cands = (word_start_letter,)
        else:
            cands = range(1, k + 2)
        for a in cands:
            fresh = a == k + 1
            if fresh and max_weight is not None and k + 1 > max_weight:
                continue
            if first:
                seq[p] = a
                if fresh:
                    state["k"] = k + 1
                    adj[a] = set()
                yield from rec(p + 1, a)
                if fresh:
                    state["k"] = k
                    del adj[a]
                continue
            prev = seq[p - 1]
            e = edge(prev, a)
            c = counts[e]
            if max_edge_visits is not None and c + 1 > max_edge_visits:
                continue
            if forest and c == 0 and (a == prev or (not fresh and _connected(adj, prev, a))):
                continue
            new_once = state["once"] + (1 if c == 0 else (-1 if c == 1 else 0))
            if min_edge_visits > 1 and new_once > steps_after[p]:
                continue
            seq[p] = a
            counts[e] = c + 1
            old_once = state["once"]
            state["once"] = new_once
            if fresh:
                state["k"] = k + 1
                adj[a] = set()
            if c == 0:
                adj[prev].add(a)
                adj[a].add(prev)
            yield from rec(p + 1, word_start_letter)
            if c == 0:
                adj[prev].discard(a)
                adj[a].discard(prev)
            if fresh:
                state["k"] = k
                del adj[a]
            state["once"] = old_once
            if c == 0:
                del counts[e]
            else:
                counts[e] = c

    yield from rec(0, 0)


def _connected(adj: dict, a, b) -> bool:
    stack, seen = [a], {a}
    while stack:
        v = stack.pop()
        if v == b:
            return True
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return False


def canonical_words(length: int, **kwargs) -> Iterator[tuple]:
    for (w,) in canonical_sentences([length], **kwargs):
        yield w


def compositions(total: int, parts: int, minimum: int = 1) -> Iterator[tuple]:
    if parts == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


WORD_KINDS = {
    "any": (None, {}),
    "closed": (None, {"closed": True}),
    "weak_wigner": (
        lambda w: classify_word(w) in
        (WordClass.WEAK_WIGNER, WordClass.WIGNER, WordClass.CRITICAL_WEAK_WIGNER),
        {"closed": True, "min_edge_visits": 2},
    ),
    "wigner": (lambda w: classify_word(w) is WordClass.WIGNER, {"closed": True, "min_edge_visits": 2}),
    "critical": (
        lambda w: classify_word(w) is WordClass.CRITICAL_WEAK_WIGNER,
        {"closed": True, "min_edge_visits": 2},
    ),
    "fk": (lambda w: is_fk_sentence((w,)), {"forest": True, "max_edge_visits": 2}),
}

SENTENCE_KINDS = {
    "weak_clt": lambda a: classify_sentence(a) is not SentenceClass.NOT_WEAK_CLT,
    "clt": lambda a: classify_sentence(a) in (SentenceClass.CLT, SentenceClass.CLT_PAIR),
    "clt_pair": lambda a: classify_sentence(a) is SentenceClass.CLT_PAIR,
    "fk_sentence": is_fk_sentence,
}


def _check_cap(total_length: int, cap: int) -> None:
    if total_length > cap:
        raise CapExceededError(f"total length {total_length} exceeds cap {cap}")


def enumerate_words(length: int, kind: str, cap: int = DEFAULT_CAP) -> list:
    """Canonical representatives of all word classes of ``kind`` with ``length`` letters."""
    _check_cap(length, cap)
    if kind not in WORD_KINDS:
        raise KeyError(f"unknown word kind {kind!r}; choose from {sorted(WORD_KINDS)}")
    pred, opts = WORD_KINDS[kind]
    gen = canonical_words(length, **opts)
    return [w for w in gen if pred is None or pred(w)]


def enumerate_sentences(lengths: Sequence[int], kind: str, cap: int = DEFAULT_CAP) -> list:
    """Canonical representatives of sentence classes of ``kind`` with these word lengths."""
    _check_cap(sum(lengths), cap)
    pred = SENTENCE_KINDS[kind]
    opts: dict = {}
    if kind in ("weak_clt", "clt", "clt_pair"):
        opts = {"closed": True, "min_edge_visits": 2}
        if kind != "weak_clt":
            twice = sum(L - 1 for L in lengths)
            if twice % 2:
                return []
            opts["max_weight"] = twice // 2
    elif kind == "fk_sentence":
        opts = {"forest": True, "max_edge_visits": 2, "chained": True}
    return [a for a in canonical_sentences(lengths, **opts) if pred(a)]


def enumerate_classes(
    total_length: int,
    kind: str,
    n_words: int = 1,
    cap: int = DEFAULT_CAP,
    keep: bool = True,
) -> tuple[int, list]:
    """Count (and optionally list) classes of total length ``total_length``.

    Word kinds: any, closed, weak_wigner, wigner, critical, fk.  Sentence kinds
    (``n_words`` words, all compositions of the length): weak_clt, clt,
    clt_pair, fk_sentence.
    """
    _check_cap(total_length, cap)
    if kind in WORD_KINDS:
        if n_words != 1:
            raise ValueError(f"{kind!r} is a word kind")
        reps = enumerate_words(total_length, kind, cap)
    elif kind in SENTENCE_KINDS:
        if kind == "clt_pair":
            n_words = 2
        reps = []
        for shape in compositions(total_length, n_words):
            reps.extend(enumerate_sentences(shape, kind, cap))
    else:
        raise KeyError(f"unknown kind {kind!r}")
    return len(reps), (reps if keep else [])


# --- generating-function counts ---------------------------------------------------


def catalan(n: int) -> int:
    from math import comb

    return comb(2 * n, n) // (n + 1)


def wigner_length_series(n_max: int) -> list:
    """``sum t^len(w)`` over Wigner word classes: Catalan numbers at odd degrees."""
    out = [0] * (n_max + 1)
    for n in range(n_max + 1):
        if 2 * n + 1 <= n_max:
            out[2 * n + 1] = catalan(n)
    return out


def _mul(a, b, n):
    out = [0] * (n + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(0, n + 1 - i):
                out[i + j] += x * b[j]
    return out


def count_fk_classes(n: int) -> int:
    """Coefficient of ``t^n`` in ``Phi/(1 - Phi)``: FK word classes of length ``n``."""
    if n < 1:
        raise ValueError("n >= 1")
    phi = wigner_length_series(n)
    total = [0] * (n + 1)
    power = phi
    for _ in range(n):
        total = [x + y for x, y in zip(total, power)]
        power = _mul(power, phi, n)
    return total[n]


# --- CLT word-pairs ----------------------------------------------------------------


def count_clt_pairs_bruteforce(l1: int, l2: int, cap: int = DEFAULT_CAP) -> int:
    return len(enumerate_sentences((l1, l2), "clt_pair", cap))


def _wigner_tuples(total: int, r: int, wigner_by_len: dict) -> Iterator[tuple]:
    for shape in compositions(total, r):
        if all(L % 2 == 1 for L in shape):
            yield from itertools.product(*(wigner_by_len[L] for L in shape))


def constructive_clt_pairs(l1: int, l2: int, cap: int = DEFAULT_CAP) -> dict:
    """Weighted multiset of CLT word-pair classes built from Wigner-word tuples.

    For every ``r`` and tuples ``u_1..u_r``, ``v_1..v_r`` of Wigner words
    (``u_i`` and ``v_i`` share only their first letter, distinct ``i`` are
    disjoint) the pairs ``[rot(u) + first, rot(v) + first]`` over all cyclic
    shifts get weight 1 for ``r = 1``; for ``r >= 2`` the pairs with ``v``
    and with its reversal ``v_r..v_1`` each get weight ``1/4`` (``r = 2``) or
    ``1/r``.  Returns ``{canonical pair: total weight}``.
    """
    _check_cap(l1 + l2, cap)
    L1, L2 = l1 - 1, l2 - 1
    out: dict = {}
    if L1 < 1 or L2 < 1:
        return out
    wigner_by_len = {L: enumerate_words(L, "wigner", cap) for L in range(1, max(L1, L2) + 1, 2)}
    for r in range(1, min(L1, L2) + 1):
        if r == 1:
            wt = Fraction(1)
        elif r == 2:
            wt = Fraction(1, 4)
        else:
            wt = Fraction(1, r)
        for us in _wigner_tuples(L1, r, wigner_by_len):
            for vs in _wigner_tuples(L2, r, wigner_by_len):
                u, v_parts = _realize(us, vs)
                variants = [v_parts] if r == 1 else [v_parts, v_parts[::-1]]
                urots = rotations(u + (u[0],))
                for vp in variants:
                    v = tuple(a for part in vp for a in part)
                    for ru in urots:
                        for rv in rotations(v + (v[0],)):
                            key = canonicalize((ru, rv))
                            out[key] = out.get(key, 0) + wt
    return out


def _realize(us, vs):
    """Letter the Wigner tuples: ``u_i`` and ``v_i`` start at the shared letter ``i``."""
    r = len(us)
    fresh = itertools.count(r + 1)
    u_parts, v_parts = [], []
    for i in range(r):
        for src, dst in ((us[i], u_parts), (vs[i], v_parts)):
            names = {1: i + 1}
            dst.append(tuple(names.setdefault(a, next(fresh)) for a in src))
    return tuple(a for p in u_parts for a in p), v_parts


def count_clt_pairs(l1: int, l2: int, method: str = "brute", cap: int = DEFAULT_CAP):
    """Number of CLT word-pair classes with word lengths ``(l1, l2)``."""
    if method == "brute":
        return count_clt_pairs_bruteforce(l1, l2, cap)
    if method == "constructive":
        total = sum(constructive_clt_pairs(l1, l2, cap).values(), Fraction(0))
        return int(total) if total.denominator == 1 else total
    raise ValueError("method must be 'brute' or 'constructive'")


# --- FK coding bound ---------------------------------------------------------------------


def fk_extension_classes(b, c) -> set:
    """Classes of FK sentences ``[x_1..x_n]`` with ``[x_1..x_{n-1}] ~ b`` and ``x_n ~ c``."""
    b = canonicalize(b)
    c = canonicalize(c)
    sb = sorted({a for w in b for a in w})
    k, q = len(sb), max(c)
    pool = list(range(1, k + q + 1))
    found = set()
    for image in itertools.permutations(pool, q):
        if image[0] > k:
            continue
        c2 = tuple(image[a - 1] for a in c)
        cand = tuple(b) + (c2,)
        if is_fk_sentence(cand):
            found.add(canonicalize(cand))
    return found


def iter_predicate(kind: str) -> Callable:
    if kind in SENTENCE_KINDS:
        return SENTENCE_KINDS[kind]
    return WORD_KINDS[kind][0] or (lambda w: True)
