"""Scalar helpers shared by the exact (Fraction) and float code paths."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

Scalar = Union[Fraction, float]


class ExactModeError(ValueError):
    """An operation would leave the rationals while exact mode was requested."""


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def all_exact(values: Iterable) -> bool:
    return all(isinstance(v, Rational) for v in values)


def to_exact(x) -> Fraction:
    """Convert ``x`` to a Fraction; strings may be ``"p/q"`` or decimals."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        # float literals are taken at their shortest decimal repr, not their binary value
        return Fraction(repr(x))
    return Fraction(x)


def to_float(x) -> float:
    return float(x)


def coerce(x, exact: bool) -> Scalar:
    return to_exact(x) if exact else float(x)


def zero(exact: bool) -> Scalar:
    return Fraction(0) if exact else 0.0


def exact_sqrt(q: Fraction) -> Fraction:
    """Square root of a nonnegative rational, raising if it is irrational."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative argument")
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn != q.numerator or rd * rd != q.denominator:
        raise ExactModeError(f"sqrt({q}) is irrational")
    return Fraction(rn, rd)


def sqrt(x, exact: bool) -> Scalar:
    return exact_sqrt(x) if exact else math.sqrt(float(x))


def format_number(x):
    """JSON-friendly form: ints stay ints, other rationals become ``"p/q"``."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    return float(x)


def parse_number(x) -> Scalar:
    """Inverse of :func:`format_number`."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return float(x)
