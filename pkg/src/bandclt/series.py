"""Truncated formal power series for the per-color moment series, the
bracelet covariance series and the fourth-moment correction series, plus the
CLT variance, covariance and mean shift they determine.

Univariate series are coefficient sequences indexed from degree 0; bivariate
series are ``(n_max+1) x (n_max+1)`` arrays (object dtype in exact mode).
Nothing here is an approximation: every coefficient up to ``n_max`` is exact
for the formal series, only higher ones are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._numeric import Scalar, coerce, zero
from .model import ColorModel
from .poly import PolyFn


class DegreeOverflowError(ValueError):
    """A test function does not fit the requested truncation."""


# --- low level series arithmetic -------------------------------------------


def smul(a: Sequence, b: Sequence, n_max: int) -> list:
    """Truncated product of two univariate series."""
    out = [0 * a[0]] * (n_max + 1) if a else []
    for i, x in enumerate(a[: n_max + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[: n_max + 1 - i]):
            if y != 0:
                out[i + j] += x * y
    return out


def _zeros2(n_max: int, exact: bool) -> np.ndarray:
    if exact:
        arr = np.empty((n_max + 1, n_max + 1), dtype=object)
        arr.fill(Fraction(0))
        return arr
    return np.zeros((n_max + 1, n_max + 1))


def bmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Truncated product of two bivariate series of equal shape."""
    n = A.shape[0]
    out = np.zeros_like(A) if A.dtype != object else _zeros2(n - 1, True)
    nz = np.argwhere(A != 0)
    for i, j in nz:
        out[i:, j:] += A[i, j] * B[: n - i, : n - j]
    return out


def outer(u: Sequence, v: Sequence, exact: bool) -> np.ndarray:
    if exact:
        return np.array([[a * b for b in v] for a in u], dtype=object)
    return np.outer(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


# --- domain types -----------------------------------------------------------


@dataclass(frozen=True)
class PhiSeries:
    """Per-color series ``Phi(c, t)``; ``by_color[c][n]`` is the ``t^n`` coefficient."""

    n_max: int
    by_color: tuple
    sigma: tuple

    def coeff(self, n: int, c: int) -> Scalar:
        return self.by_color[c][n]

    def vector(self, n: int) -> tuple:
        return tuple(col[n] for col in self.by_color)


@dataclass(frozen=True)
class MomentSequence:
    moments: tuple
    provenance: str = "theta"

    def __getitem__(self, n):
        return self.moments[n]

    def __len__(self):
        return len(self.moments)


@dataclass(frozen=True, eq=False)
class BivarSeries:
    """Truncated bivariate series; ``coeffs[i, j]`` multiplies ``x^i y^j``."""

    n_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs.flags.writeable = False

    def __getitem__(self, ij):
        return self.coeffs[ij]

    def __add__(self, other: "BivarSeries") -> "BivarSeries":
        n = min(self.n_max, other.n_max)
        return BivarSeries(n, self.coeffs[: n + 1, : n + 1] + other.coeffs[: n + 1, : n + 1])

    def scale(self, c) -> "BivarSeries":
        return BivarSeries(self.n_max, self.coeffs * c)

    def diagonal(self) -> list:
        """Coefficients of the one-variable restriction ``t -> F(t, t)`` up to ``n_max``."""
        out = [0 * self.coeffs[0, 0]] * (self.n_max + 1)
        for i in range(self.n_max + 1):
            for j in range(self.n_max + 1 - i):
                out[i + j] += self.coeffs[i, j]
        return out

    def is_symmetric(self) -> bool:
        return bool(np.all(self.coeffs == self.coeffs.T))


# --- the generating functions ------------------------------------------------


def phi(model: ColorModel, sigma: Optional[Sequence] = None, n_max: int = 10) -> PhiSeries:
    """Solve the per-color functional equation degree by degree.

    With ``A(c,t) = t/(1 - D(c) t)`` and ``B(c,t) = sum_c' s2(c,c') sigma(c')
    Phi(c',t)`` the series obeys ``Phi = A + A B Phi``.  ``A B`` starts at
    degree 2, so ``Phi_n`` only needs ``Phi_{<n}``.
    """
    ex = model.exact
    sigma = tuple(coerce(s, ex) for s in (sigma if sigma is not None else model.theta))
    m = model.m
    z = zero(ex)
    A = [[z] + [model.D[c] ** (k - 1) for k in range(1, n_max + 1)] for c in range(m)]
    # weighted kernel rows: W[c][c'] = s2(c, c') sigma(c')
    W = [[model.s2[c][k] * sigma[k] for k in range(m)] for c in range(m)]
    Phi = [[z] * (n_max + 1) for _ in range(m)]
    B = [[z] * (n_max + 1) for _ in range(m)]
    AB = [[z] * (n_max + 1) for _ in range(m)]
    for n in range(1, n_max + 1):
        for c in range(m):
            B[c][n - 1] = sum((W[c][k] * Phi[k][n - 1] for k in range(m)), z)
        for c in range(m):
            AB[c][n] = sum((A[c][i] * B[c][n - i] for i in range(1, n)), z)
        for c in range(m):
            Phi[c][n] = A[c][n] + sum((AB[c][j] * Phi[c][n - j] for j in range(2, n)), z)
    return PhiSeries(n_max, tuple(tuple(col) for col in Phi), sigma)


def mu_moments(
    model: ColorModel, sigma: Optional[Sequence] = None, n_max: int = 10
) -> MomentSequence:
    """Moments ``<mu_sigma, x^n> = <sigma, Phi_{n+1}>`` for ``n = 0..n_max``."""
    ph = phi(model, sigma, n_max + 1)
    z = zero(model.exact)
    moments = tuple(
        sum((ph.sigma[c] * ph.by_color[c][n + 1] for c in range(model.m)), z)
        for n in range(n_max + 1)
    )
    return MomentSequence(moments, "theta" if sigma is None else "sigma")


def theta_series(
    model: ColorModel, n_max: int, sigma: Optional[Sequence] = None, ph: Optional[PhiSeries] = None
) -> BivarSeries:
    """Bracelet series ``sum_r (1/r) tr(T^r)`` with transfer matrix
    ``T[c][c'] = s2(c,c') sigma(c') Phi(c',x) Phi(c',y)``.

    ``tr(T^r)`` has minimal bidegree ``(r, r)``, so stopping at ``r = n_max``
    drops nothing below the truncation.
    """
    ex = model.exact
    ph = ph or phi(model, sigma, n_max)
    m = model.m
    P = [outer(ph.by_color[c][: n_max + 1], ph.by_color[c][: n_max + 1], ex) for c in range(m)]
    T = [[P[k] * (model.s2[c][k] * ph.sigma[k]) for k in range(m)] for c in range(m)]
    total = _zeros2(n_max, ex)
    power = T
    for r in range(1, n_max + 1):
        tr = _zeros2(n_max, ex)
        for c in range(m):
            tr = tr + power[c][c]
        total = total + tr * (Fraction(1, r) if ex else 1.0 / r)
        if r == n_max:
            break
        power = [
            [_matsum([bmul(power[c][k], T[k][d]) for k in range(m)], n_max, ex) for d in range(m)]
            for c in range(m)
        ]
    return BivarSeries(n_max, total)


def _matsum(terms, n_max, ex):
    out = _zeros2(n_max, ex)
    for t in terms:
        out = out + t
    return out


def psi_series(
    model: ColorModel, n_max: int, sigma: Optional[Sequence] = None, ph: Optional[PhiSeries] = None
) -> BivarSeries:
    """Correction series from the diagonal variances and off-diagonal fourth moments."""
    ex = model.exact
    ph = ph or phi(model, sigma, n_max)
    m, w = model.m, ph.sigma
    total = _zeros2(n_max, ex)
    half = Fraction(1, 2) if ex else 0.5
    for c in range(m):
        coef = w[c] * (model.d2[c] - 2 * model.s2[c][c])
        if coef != 0:
            u = ph.by_color[c][: n_max + 1]
            total = total + outer(u, u, ex) * coef
    for c1 in range(m):
        for c2 in range(m):
            coef = half * w[c1] * w[c2] * (model.s4[c1][c2] - 3 * model.s2[c1][c2] ** 2)
            if coef != 0:
                q = smul(ph.by_color[c1], ph.by_color[c2], n_max)
                total = total + outer(q, q, ex) * coef
    return BivarSeries(n_max, total)


def _theta_psi(model: ColorModel, n_max: int, sigma: Optional[Sequence]):
    ph = phi(model, sigma, n_max)
    return theta_series(model, n_max, ph=ph), psi_series(model, n_max, ph=ph)


def covariance_kernel(
    model: ColorModel, n_max: int, sigma: Optional[Sequence] = None
) -> BivarSeries:
    """``2 Theta + Psi``: the matrix of limiting covariances of the centered power traces."""
    th, ps = _theta_psi(model, n_max, sigma)
    return th.scale(2) + ps


def shift_kernel(model: ColorModel, n_max: int, sigma: Optional[Sequence] = None) -> BivarSeries:
    """``Theta + Psi``, whose diagonal restriction drives the mean shift."""
    th, ps = _theta_psi(model, n_max, sigma)
    return th + ps


# --- predictors ----------------------------------------------------------------


def _check_degree(f: PolyFn, n_max: Optional[int]) -> int:
    d = max(f.degree, 1)
    if n_max is None:
        return d
    if f.degree > n_max:
        raise DegreeOverflowError(f"deg f = {f.degree} exceeds truncation n_max = {n_max}")
    return n_max


def clt_covariance(
    model: ColorModel,
    f: PolyFn,
    g: PolyFn,
    n_max: Optional[int] = None,
    sigma: Optional[Sequence] = None,
    kernel: Optional[BivarSeries] = None,
) -> Scalar:
    """Limiting covariance of the centered linear statistics of ``f`` and ``g``."""
    n = _check_degree(f if f.degree >= g.degree else g, n_max)
    if kernel is None:
        kernel = covariance_kernel(model, n, sigma)
    elif max(f.degree, g.degree) > kernel.n_max:
        raise DegreeOverflowError("kernel truncation too small for these test functions")
    n = kernel.n_max
    a = f.x_derivative_coeffs(n)
    b = g.x_derivative_coeffs(n)
    acc = zero(model.exact)
    for i in range(1, n + 1):
        if a[i] == 0:
            continue
        for j in range(1, n + 1):
            if b[j] != 0:
                acc += kernel[i, j] * coerce(a[i], model.exact) * coerce(b[j], model.exact)
    return acc


def clt_variance(
    model: ColorModel,
    f: PolyFn,
    n_max: Optional[int] = None,
    sigma: Optional[Sequence] = None,
    kernel: Optional[BivarSeries] = None,
) -> Scalar:
    """Limiting variance of ``trace f(X) - E trace f(X)``."""
    return clt_covariance(model, f, f, n_max, sigma, kernel)


def mean_shift(
    model: ColorModel,
    f: PolyFn,
    n_max: Optional[int] = None,
    sigma: Optional[Sequence] = None,
    kernel: Optional[BivarSeries] = None,
) -> Scalar:
    """Limit of ``E trace f(X) - N <mu_N, f>``: half the pairing of the diagonal
    restriction of ``Theta + Psi`` with ``t f'(t)``.

    ``kernel`` may be a precomputed :func:`shift_kernel` for the same model and sigma.
    """
    if kernel is None:
        n = _check_degree(f, n_max)
        kernel = shift_kernel(model, n, sigma)
    elif f.degree > kernel.n_max:
        raise DegreeOverflowError("kernel truncation too small for this test function")
    n = kernel.n_max
    diag = kernel.diagonal()
    a = f.x_derivative_coeffs(n)
    acc = zero(model.exact)
    for k in range(1, n + 1):
        if a[k] != 0:
            acc += diag[k] * coerce(a[k], model.exact)
    return acc * (Fraction(1, 2) if model.exact else 0.5)


def limit_moment_pairing(moments: MomentSequence, f: PolyFn) -> Scalar:
    """``<mu, f>`` from a moment sequence."""
    if f.degree >= len(moments):
        raise DegreeOverflowError("not enough moments for this polynomial")
    return sum(moments[k] * a for k, a in enumerate(f.coeffs))
