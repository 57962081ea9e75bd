"""Words, sentences and their graphs.

A word is a tuple of positive ints (letters); a sentence is a tuple of words.
An edge is a ``frozenset`` of one (degenerate) or two letters.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

Word = tuple
Sentence = tuple


class NotApplicableError(ValueError):
    """The input is outside the domain of the requested operation."""


class WordClass(enum.Enum):
    NOT_CLOSED = "not_closed"
    CLOSED_OTHER = "closed_other"
    WEAK_WIGNER = "weak_wigner"
    WIGNER = "wigner"
    CRITICAL_WEAK_WIGNER = "critical_weak_wigner"


class SentenceClass(enum.Enum):
    NOT_WEAK_CLT = "not_weak_clt"
    WEAK_CLT = "weak_clt"
    CLT = "clt"
    CLT_PAIR = "clt_pair"


def _is_sentence(s) -> bool:
    return len(s) > 0 and isinstance(s[0], (tuple, list))


def as_sentence(s) -> Sentence:
    if _is_sentence(s):
        words = tuple(tuple(w) for w in s)
    else:
        words = (tuple(s),)
    if not words or any(len(w) == 0 for w in words):
        raise ValueError("sentences and words are never empty")
    return words


def canonicalize(s: Union[Word, Sentence]):
    """Relabel letters 1, 2, 3, ... by order of first appearance.

    Returns a word for a word and a sentence for a sentence.
    """
    sentence = _is_sentence(s)
    words = as_sentence(s)
    labels: dict = {}
    out = []
    for w in words:
        out.append(tuple(labels.setdefault(a, len(labels) + 1) for a in w))
    return tuple(out) if sentence else out[0]


def edge(a, b) -> frozenset:
    return frozenset((a, b))


def word_edges(w: Word) -> list:
    """Edges visited by ``w`` in order (one per step)."""
    return [edge(a, b) for a, b in zip(w, w[1:])]


def support(s) -> frozenset:
    return frozenset(a for w in as_sentence(s) for a in w)


def weight(s) -> int:
    return len(support(s))


def is_closed(w: Word) -> bool:
    return w[0] == w[-1]


@dataclass(frozen=True)
class SentenceGraph:
    vertices: frozenset
    visits: dict

    @property
    def edges(self) -> frozenset:
        return frozenset(self.visits)

    def is_connected(self) -> bool:
        return len(components(self.vertices, self.edges)) == 1

    def is_tree(self) -> bool:
        if any(len(e) == 1 for e in self.edges):
            return False
        return self.is_connected() and len(self.edges) == len(self.vertices) - 1

    def is_unicyclic(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vertices)


def graph(s) -> SentenceGraph:
    """Graph of a sentence; edges come only from steps inside each word."""
    words = as_sentence(s)
    visits = Counter()
    for w in words:
        visits.update(word_edges(w))
    return SentenceGraph(support(words), dict(visits))


def visit_counts(w: Word) -> Counter:
    return Counter(word_edges(w))


def components(vertices: Iterable, edges: Iterable) -> list:
    """Connected components as a list of frozensets of vertices."""
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in edges:
        ends = tuple(e)
        a, b = ends[0], ends[-1]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for v in parent:
        groups.setdefault(find(v), set()).add(v)
    return [frozenset(g) for g in groups.values()]


# --- taxonomy ---------------------------------------------------------------


def is_weak_wigner(w: Word) -> bool:
    return is_closed(w) and all(n >= 2 for n in visit_counts(w).values())


def classify_word(w: Word) -> WordClass:
    w = tuple(w)
    if not is_closed(w):
        return WordClass.NOT_CLOSED
    if not is_weak_wigner(w):
        return WordClass.CLOSED_OTHER
    twice_weight = 2 * weight(w)
    if twice_weight == len(w) + 1:
        return WordClass.WIGNER
    if twice_weight == len(w) - 1:
        return WordClass.CRITICAL_WEAK_WIGNER
    return WordClass.WEAK_WIGNER


def is_wigner(w: Word) -> bool:
    return classify_word(w) is WordClass.WIGNER


def is_weak_clt(a: Sentence) -> bool:
    words = as_sentence(a)
    if not all(is_closed(w) for w in words):
        return False
    if any(n < 2 for n in graph(words).visits.values()):
        return False
    edge_sets = [set(word_edges(w)) for w in words]
    for i, ei in enumerate(edge_sets):
        if not any(ei & ej for j, ej in enumerate(edge_sets) if j != i):
            return False
    return True


def classify_sentence(a: Sentence) -> SentenceClass:
    words = as_sentence(a)
    if not is_weak_clt(words):
        return SentenceClass.NOT_WEAK_CLT
    if 2 * weight(words) != sum(len(w) - 1 for w in words):
        return SentenceClass.WEAK_CLT
    return SentenceClass.CLT_PAIR if len(words) == 2 else SentenceClass.CLT


def is_clt_pair(a: Sentence) -> bool:
    return classify_sentence(a) is SentenceClass.CLT_PAIR


# --- Furedi-Komlos machinery -----------------------------------------------------


def is_fk_sentence(a: Sentence) -> bool:
    words = as_sentence(a)
    g = graph(words)
    if not g.is_tree():
        # a single vertex with no edges is a (trivial) tree
        if not (len(g.vertices) == 1 and not g.edges):
            return False
    if any(n > 2 for n in g.visits.values()):
        return False
    seen = set(words[0])
    for w in words[1:]:
        if w[0] not in seen:
            return False
        seen.update(w)
    return True


def is_fk_word(w: Word) -> bool:
    return is_fk_sentence((tuple(w),))


def fk_syllabify(w: Word) -> Sentence:
    """Break ``w`` before every step along an old edge and before third and
    later steps along a new edge (an edge is new when it first leads to an
    unseen letter)."""
    w = tuple(w)
    new_edges = set()
    seen = {w[0]}
    for a, b in zip(w, w[1:]):
        if b not in seen:
            new_edges.add(edge(a, b))
        seen.add(b)
    out, current = [], [w[0]]
    count = Counter()
    for a, b in zip(w, w[1:]):
        e = edge(a, b)
        count[e] += 1
        if e not in new_edges or count[e] >= 3:
            out.append(tuple(current))
            current = [b]
        else:
            current.append(b)
    out.append(tuple(current))
    return tuple(out)


def wigner_decomposition(w: Word) -> list:
    """Split an FK word into its pairwise disjoint Wigner words (breaks at once-visited edges)."""
    w = tuple(w)
    if not is_fk_word(w):
        raise NotApplicableError(f"{w} is not an FK word")
    counts = visit_counts(w)
    parts, current = [], [w[0]]
    for a, b in zip(w, w[1:]):
        if counts[edge(a, b)] == 1:
            parts.append(tuple(current))
            current = [b]
        else:
            current.append(b)
    parts.append(tuple(current))
    return parts


def acronym(w: Word) -> Word:
    """First letters of the Wigner decomposition of an FK word."""
    return tuple(p[0] for p in wigner_decomposition(w))


def fk_bound_count(n: int, k: int) -> int:
    """Crude coding bound ``2^n n^{3(n-2k+2)}`` on weak Wigner classes with
    ``n + 1`` letters and weight ``k``."""
    if n < 2 * k - 2 or k < 0:
        raise ValueError(f"need n >= 2k - 2 >= 0 (got n={n}, k={k})")
    return 2**n * n ** (3 * (n - 2 * k + 2))


nfk_bound = fk_bound_count


# --- bracelets and polarizations ----------------------------------------------------


@dataclass(frozen=True)
class BraceletInfo:
    bracelet_edges: frozenset
    circuit_length: int
    pendant_components: tuple

    @property
    def bracelet_vertices(self) -> frozenset:
        return frozenset(v for e in self.bracelet_edges for v in e)


def _unicyclic_bracelet(g: SentenceGraph) -> frozenset:
    z = []
    for e in g.edges:
        rest = g.edges - {e}
        if len(components(g.vertices, rest)) == 1:
            z.append(e)
    return frozenset(z)


def _pendants(g: SentenceGraph, z: frozenset) -> tuple:
    comps = components(g.vertices, g.edges - z)
    return tuple(sorted(comps, key=lambda c: sorted(c)))


def bracelet(x) -> BraceletInfo:
    """Bracelet and circuit length of a CLT word-pair or a critical weak Wigner word."""
    words = as_sentence(x)
    if len(words) == 2 and is_clt_pair(words):
        g = graph(words)
        if g.is_tree():
            cw, cx = visit_counts(words[0]), visit_counts(words[1])
            doubled = [e for e in g.edges if cw[e] == 2 and cx[e] == 2]
            if len(doubled) != 1:
                raise NotApplicableError("tree CLT pair without a unique doubly visited edge")
            z = frozenset(doubled)
            return BraceletInfo(z, 2, _pendants(g, z))
    elif len(words) == 1 and classify_word(words[0]) is WordClass.CRITICAL_WEAK_WIGNER:
        g = graph(words)
        if g.is_tree():
            quad = [e for e, n in g.visits.items() if n == 4]
            if len(quad) != 1:
                raise NotApplicableError("tree critical word without a unique 4-visited edge")
            z = frozenset(quad)
            return BraceletInfo(z, 2, _pendants(g, z))
    else:
        raise NotApplicableError("bracelets are defined for CLT pairs and critical weak Wigner words")
    if not g.is_unicyclic():
        raise NotApplicableError("graph is neither a tree nor unicyclic")
    z = _unicyclic_bracelet(g)
    return BraceletInfo(z, len(z), _pendants(g, z))


def rotations(w: Word) -> list:
    """All closed words ``rot(w_check) + first letter`` over the cyclic shifts of
    ``w`` with its last letter dropped (one per shift, repeats kept)."""
    core = tuple(w[:-1])
    out = []
    for s in range(len(core)):
        r = core[s:] + core[:s]
        out.append(r + (r[0],))
    return out


def polarizations(pair: Sentence) -> list:
    """Pairs of shift indices ``(s, t)`` whose rotated walks end on the same edge."""
    w, x = as_sentence(pair)
    if len(w) < 2 or len(x) < 2:
        raise NotApplicableError("both words need length >= 2")
    rw = [edge(r[-2], r[-1]) for r in rotations(w)]
    rx = [edge(r[-2], r[-1]) for r in rotations(x)]
    return [(s, t) for s, a in enumerate(rw) for t, b in enumerate(rx) if a == b]


def polarization_count(pair: Sentence) -> int:
    words = as_sentence(pair)
    if len(words) != 2 or not is_clt_pair(words):
        raise NotApplicableError("polarizations are defined for CLT word-pairs")
    return len(polarizations(words))


def concatenation(s: Sentence) -> Word:
    return tuple(a for w in as_sentence(s) for a in w)


def is_mirror_or_equal(a: Sequence, b: Sequence) -> bool:
    return tuple(a) == tuple(b) or tuple(a) == tuple(reversed(b))
