"""Discretized colored band-matrix model.

Color space is a finite set of ``m`` atoms.  Every kernel is stored as a
tuple (or tuple of tuples) of either :class:`fractions.Fraction` (exact mode)
or ``float`` (float mode); a model never mixes the two.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from ._numeric import (
    ExactModeError,
    Scalar,
    all_exact,
    coerce,
    exact_sqrt,
    format_number,
    sqrt,
)

FLOAT_TOL = 1e-12


class ModelError(ValueError):
    """Raised for models or colorings that cannot be constructed."""


def _vec(values, exact):
    return tuple(coerce(v, exact) for v in values)


def _mat(rows, exact):
    return tuple(tuple(coerce(v, exact) for v in row) for row in rows)


def _flatten(*parts):
    for p in parts:
        for v in p:
            if isinstance(v, (list, tuple)):
                yield from v
            else:
                yield v


@dataclass(frozen=True)
class ColorModel:
    """Weights and moment kernels on ``m`` color atoms.

    Use :meth:`build` rather than the raw constructor; it fills defaults,
    coerces every entry to one numeric mode and checks shapes.
    """

    m: int
    theta: tuple
    D: tuple
    d2: tuple
    s2: tuple
    s4: tuple
    tail_bound: Scalar = 0
    exact: bool = True

    @classmethod
    def build(
        cls,
        theta: Sequence,
        s2: Sequence[Sequence],
        D: Optional[Sequence] = None,
        d2: Optional[Sequence] = None,
        s4: Optional[Sequence[Sequence]] = None,
        tail_bound=0,
        exact: Optional[bool] = None,
    ) -> "ColorModel":
        """Assemble a model.

        Missing ``D`` defaults to zero, missing ``d2`` to ``2 s2(c, c)`` and
        missing ``s4`` to ``3 s2**2``, i.e. the Gaussian-consistent choice.
        ``exact=None`` picks exact mode iff every supplied number is rational
        (ints, Fractions or ``"p/q"`` strings).
        """
        m = len(theta)
        if m < 1:
            raise ModelError("a model needs at least one color")
        if len(s2) != m or any(len(row) != m for row in s2):
            raise ModelError(f"s2 must be {m}x{m}")
        if exact is None:
            supplied = [theta, s2] + [x for x in (D, d2, s4) if x is not None]
            exact = all_exact(
                Fraction(v) if isinstance(v, str) else v for v in _flatten(*supplied)
            )
        s2m = _mat(s2, exact)
        D = _vec(D if D is not None else [0] * m, exact)
        d2 = _vec(d2 if d2 is not None else [2 * s2m[c][c] for c in range(m)], exact)
        if s4 is None:
            s4 = [[3 * v * v for v in row] for row in s2m]
        s4m = _mat(s4, exact)
        if len(D) != m or len(d2) != m:
            raise ModelError(f"D and d2 must have length {m}")
        if len(s4m) != m or any(len(row) != m for row in s4m):
            raise ModelError(f"s4 must be {m}x{m}")
        return cls(m, _vec(theta, exact), D, d2, s2m, s4m, coerce(tail_bound, exact), exact)

    def as_float(self) -> "ColorModel":
        if not self.exact:
            return self
        return ColorModel(
            self.m,
            _vec(self.theta, False),
            _vec(self.D, False),
            _vec(self.d2, False),
            _mat(self.s2, False),
            _mat(self.s4, False),
            float(self.tail_bound),
            False,
        )

    def with_theta(self, theta: Sequence) -> "ColorModel":
        """Same kernels, different color weights (e.g. an empirical ``theta_N``)."""
        if len(theta) != self.m:
            raise ModelError(f"theta must have length {self.m}")
        return ColorModel(
            self.m, _vec(theta, self.exact), self.D, self.d2, self.s2, self.s4,
            self.tail_bound, self.exact,
        )

    def to_dict(self) -> dict:
        fmt = format_number
        return {
            "m": self.m,
            "theta": [fmt(v) for v in self.theta],
            "D": [fmt(v) for v in self.D],
            "d2": [fmt(v) for v in self.d2],
            "s2": [[fmt(v) for v in row] for row in self.s2],
            "s4": [[fmt(v) for v in row] for row in self.s4],
            "tail_bound": fmt(self.tail_bound),
            "exact": self.exact,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def unit_wigner(d2=2, s4=3, exact: bool = True) -> ColorModel:
    """One color, ``s2 = 1``: the classical Wigner model."""
    return ColorModel.build([1], [[1]], D=[0], d2=[d2], s4=[[s4]], exact=exact)


def _close(a, b, exact) -> bool:
    return a == b if exact else abs(a - b) <= FLOAT_TOL * max(1.0, abs(a), abs(b))


def validate_model(model: ColorModel) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    m, ex = model.m, model.exact
    if any(t < 0 for t in model.theta):
        problems.append("theta has negative entries")
    total = sum(model.theta)
    if not _close(total, 1, ex):
        problems.append(f"theta sums to {format_number(total)}, not 1")
    if any(v < 0 for v in model.d2):
        problems.append("d2 has negative entries")
    if model.tail_bound < 0:
        problems.append("tail_bound is negative")
    for name, mat in (("s2", model.s2), ("s4", model.s4)):
        for i in range(m):
            for j in range(m):
                if mat[i][j] < 0:
                    problems.append(f"{name}[{i}][{j}] is negative")
                if j > i and not _close(mat[i][j], mat[j][i], ex):
                    problems.append(f"{name} not symmetric at ({i},{j})")
    for i in range(m):
        for j in range(m):
            need = model.s2[i][j] ** 2
            if model.s4[i][j] < need and not _close(model.s4[i][j], need, ex):
                problems.append(f"s4 < s2^2 at ({i},{j})")
    return problems


def support_bound(model: ColorModel) -> Scalar:
    """``2 (max|D| + sqrt(max s2))``; exact when the square root is rational."""
    dmax = max(abs(v) for v in model.D)
    smax = max(max(row) for row in model.s2)
    if model.exact:
        try:
            return 2 * (dmax + exact_sqrt(smax))
        except ExactModeError:
            pass
    return 2 * (float(dmax) + sqrt(smax, False))


def wigner_condition(model: ColorModel) -> bool:
    """``D == 0`` and every theta-weighted row sum of ``s2`` equals one."""
    if any(v != 0 for v in model.D):
        return False
    for row in model.s2:
        rs = sum(s * t for s, t in zip(row, model.theta))
        if not _close(rs, 1, model.exact):
            return False
    return True


@dataclass(frozen=True)
class LetterColoring:
    """Assignment of a color atom to each of the ``N`` matrix indices."""

    colors: tuple
    scheme: str = "blocks"

    @property
    def N(self) -> int:
        return len(self.colors)

    @classmethod
    def from_blocks(cls, blocks: Sequence[tuple[int, int]]) -> "LetterColoring":
        colors = []
        for c, count in blocks:
            if count < 0 or c < 0:
                raise ModelError(f"bad block ({c}, {count})")
            colors.extend([int(c)] * int(count))
        if not colors:
            raise ModelError("coloring must have N >= 1")
        return cls(tuple(colors), "blocks")

    @classmethod
    def from_profile(cls, N: int, profile: Sequence[tuple]) -> "LetterColoring":
        """``profile`` is a list of ``(upper, color)``: index ``i`` (1-based)
        gets the color of the first entry with ``i/N <= upper``."""
        if N < 1:
            raise ModelError("coloring must have N >= 1")
        pts = [(Fraction(u), int(c)) for u, c in profile]
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ModelError("profile breakpoints must increase")
        if not pts or pts[-1][0] < 1:
            raise ModelError("profile must cover (0, 1]")
        colors = []
        for i in range(1, N + 1):
            x = Fraction(i, N)
            colors.append(next(c for u, c in pts if x <= u))
        return cls(tuple(colors), "profile")

    @classmethod
    def proportional(cls, theta: Sequence, N: int) -> "LetterColoring":
        """Blocks whose sizes round ``N * theta`` (largest remainder)."""
        raw = [Fraction(t) * N for t in theta]
        counts = [int(r) for r in raw]
        order = sorted(range(len(raw)), key=lambda i: raw[i] - counts[i], reverse=True)
        for i in order[: N - sum(counts)]:
            counts[i] += 1
        return cls.from_blocks(list(enumerate(counts)))

    def check(self, m: int) -> None:
        bad = [c for c in self.colors if not 0 <= c < m]
        if bad:
            raise ModelError(f"coloring uses colors {sorted(set(bad))} outside 0..{m - 1}")


def empirical_theta(coloring: LetterColoring, m: Optional[int] = None) -> tuple:
    """Color distribution of the letters, as exact Fractions."""
    m = m if m is not None else max(coloring.colors) + 1
    coloring.check(m)
    counts = [0] * m
    for c in coloring.colors:
        counts[c] += 1
    return tuple(Fraction(k, coloring.N) for k in counts)


@dataclass(frozen=True)
class WishartParams:
    thetaA: Scalar
    alpha: Scalar
    beta: Scalar
    gamma: Scalar
    block_a: tuple = field(default=(0,))
    block_b: tuple = field(default=(1,))


def wishart_params(thetaA, exact: Optional[bool] = None) -> WishartParams:
    if exact is None:
        exact = all_exact([Fraction(thetaA) if isinstance(thetaA, str) else thetaA])
    tA = coerce(thetaA, exact)
    if not 0 < tA:
        raise ModelError("thetaA must be > 0")
    if tA > Fraction(1, 2):
        raise ModelError("thetaA must be <= 1/2")
    alpha = sqrt((1 - tA) / tA, exact)
    beta = 1 / alpha
    return WishartParams(tA, alpha, beta, alpha + beta)


def wishart_model(
    thetaA,
    s2AB=None,
    weightsA: Optional[Sequence] = None,
    weightsB: Optional[Sequence] = None,
    s4AB=None,
    exact: Optional[bool] = None,
) -> tuple[ColorModel, WishartParams]:
    """Bipartite two-block model whose ``Y Y^T`` block is a generalized Wishart matrix.

    Block A holds mass ``thetaA`` split by ``weightsA`` (default: one atom),
    block B the rest.  ``s2AB`` is the ``mA x mB`` cross kernel, or a scalar
    for a constant kernel; ``None`` means the constant kernel ``gamma``, the
    only constant satisfying the row-sum constraints.  Colors are ordered
    A-atoms first.  Exact mode is used only if ``(1 - thetaA)/thetaA`` is a
    rational square; otherwise everything is float.
    """
    if exact is None:
        exact = all_exact([Fraction(thetaA) if isinstance(thetaA, str) else thetaA])
        if exact:
            try:
                exact_sqrt((1 - Fraction(thetaA)) / Fraction(thetaA))
            except (ExactModeError, ZeroDivisionError):
                exact = False
    p = wishart_params(thetaA, exact)
    tA = p.thetaA
    wA = _vec(weightsA if weightsA is not None else [tA], exact)
    wB = _vec(weightsB if weightsB is not None else [1 - tA], exact)
    if not _close(sum(wA), tA, exact) or not _close(sum(wB), 1 - tA, exact):
        raise ModelError("block weights must sum to thetaA and 1 - thetaA")
    mA, mB = len(wA), len(wB)
    if s2AB is None:
        s2AB = [[p.gamma] * mB for _ in range(mA)]
    elif not isinstance(s2AB, (list, tuple)):
        s2AB = [[s2AB] * mB for _ in range(mA)]
    cross = _mat(s2AB, exact)
    if len(cross) != mA or any(len(r) != mB for r in cross):
        raise ModelError(f"s2AB must be {mA}x{mB}")
    for b in range(mB):
        if not _close(sum(cross[a][b] * wA[a] for a in range(mA)), p.beta, exact):
            raise ModelError("cross kernel violates the A-side row sum (must equal beta)")
    for a in range(mA):
        if not _close(sum(cross[a][b] * wB[b] for b in range(mB)), p.alpha, exact):
            raise ModelError("cross kernel violates the B-side row sum (must equal alpha)")
    s4c = _mat(s4AB, exact) if s4AB is not None else tuple(
        tuple(3 * v * v for v in row) for row in cross
    )
    m = mA + mB
    z = coerce(0, exact)
    s2 = [[z] * m for _ in range(m)]
    s4 = [[z] * m for _ in range(m)]
    for a in range(mA):
        for b in range(mB):
            s2[a][mA + b] = s2[mA + b][a] = cross[a][b]
            s4[a][mA + b] = s4[mA + b][a] = s4c[a][b]
    model = ColorModel.build(
        list(wA) + list(wB), s2, D=[z] * m, d2=[z] * m, s4=s4, exact=exact
    )
    params = WishartParams(
        tA, p.alpha, p.beta, p.gamma, tuple(range(mA)), tuple(range(mA, m))
    )
    return model, params
