"""Test functions: real polynomials and piecewise polynomials."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._numeric import to_exact


def _trim(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs) if coeffs else (0,)


@dataclass(frozen=True)
class PolyFn:
    """Polynomial ``a0 + a1 x + ... + ad x^d`` with coefficients low degree first."""

    coeffs: tuple

    def __init__(self, coeffs: Sequence):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    @classmethod
    def monomial(cls, d: int, c=1) -> "PolyFn":
        return cls([0] * d + [c])

    @classmethod
    def parse(cls, text: str) -> "PolyFn":
        """``"1,0,3"`` or ``"poly:1,0,3"`` -> ``1 + 3x^2`` (exact rationals)."""
        if text.startswith("poly:"):
            text = text[5:]
        return cls([to_exact(t.strip()) for t in text.split(",") if t.strip()])

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    def derivative(self) -> "PolyFn":
        return PolyFn([k * a for k, a in enumerate(self.coeffs)][1:] or [0])

    def x_derivative_coeffs(self, n_max: int) -> list:
        """Coefficients ``g_k = k a_k`` of ``x f'(x)`` for ``k = 0..n_max``."""
        g = [0] * (n_max + 1)
        for k, a in enumerate(self.coeffs):
            if k <= n_max:
                g[k] = k * a
        return g

    def __call__(self, x):
        acc = 0 * x
        for a in reversed(self.coeffs):
            acc = acc * x + (float(a) if isinstance(x, (float, np.ndarray)) else a)
        return acc

    def __add__(self, other: "PolyFn") -> "PolyFn":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0] * (n - len(other.coeffs))
        return PolyFn([x + y for x, y in zip(a, b)])

    def __mul__(self, other) -> "PolyFn":
        if not isinstance(other, PolyFn):
            return PolyFn([other * a for a in self.coeffs])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyFn(out)

    __rmul__ = __mul__

    def shift(self, c) -> "PolyFn":
        """``x -> f(x + c)``."""
        out = [0] * len(self.coeffs)
        for k, a in enumerate(self.coeffs):
            for j in range(k + 1):
                out[j] += a * math.comb(k, j) * c ** (k - j)
        return PolyFn(out)

    def compose_square(self) -> "PolyFn":
        """``x -> f(x^2)``."""
        out = [0] * (2 * len(self.coeffs) - 1)
        for k, a in enumerate(self.coeffs):
            out[2 * k] = a
        return PolyFn(out)

    def spec(self) -> str:
        return "poly:" + ",".join(str(Fraction(a)) if not isinstance(a, float) else repr(a)
                                  for a in self.coeffs)


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial with sorted ``breakpoints`` and ``len+1`` pieces.

    Piece ``k`` applies on ``[b_{k-1}, b_k)``; the outer pieces extend to
    infinity, which is how evaluation outside a bounded window is defined.
    """

    breakpoints: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise ValueError("breakpoints must be sorted")

    @classmethod
    def clamp(cls, lo, hi) -> "PiecewisePoly":
        return cls((lo, hi), (PolyFn([lo]), PolyFn([0, 1]), PolyFn([hi])))

    @classmethod
    def parse(cls, text: str) -> "PiecewisePoly":
        """``"pw:b1,b2;c0;c1;c2"`` (pieces as coefficient lists) or ``"clamp:lo,hi"``."""
        if text.startswith("clamp:"):
            lo, hi = (to_exact(t) for t in text[6:].split(","))
            return cls.clamp(lo, hi)
        if not text.startswith("pw:"):
            raise ValueError(f"not a piecewise spec: {text!r}")
        parts = text[3:].split(";")
        bps = tuple(to_exact(t) for t in parts[0].split(",") if t.strip())
        return cls(bps, tuple(PolyFn.parse(p) for p in parts[1:]))

    @property
    def lipschitz_on_bounded(self) -> bool:
        return all(p.degree <= 1 for p in (self.pieces[0], self.pieces[-1]))

    def __call__(self, x):
        bps = [float(b) for b in self.breakpoints]
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(bps, x, side="right")
        out = np.empty_like(x)
        for k, p in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                out[sel] = p(x[sel])
        return out

    def derivative_at(self, x: float) -> float:
        k = bisect.bisect_right([float(b) for b in self.breakpoints], x)
        return float(self.pieces[k].derivative()(float(x)))

    def spec(self) -> str:
        return "pw:" + ",".join(str(b) for b in self.breakpoints) + ";" + ";".join(
            p.spec()[5:] for p in self.pieces
        )


def parse_test_function(text: str):
    """Dispatch a ``--f`` string to :class:`PolyFn` or :class:`PiecewisePoly`."""
    if text.startswith(("pw:", "clamp:")):
        return PiecewisePoly.parse(text)
    return PolyFn.parse(text)
