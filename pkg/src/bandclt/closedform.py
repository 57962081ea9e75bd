"""Chebyshev diagonalization and the explicit Wigner and Wishart specializations.

Normalization: ``T_n(z + 1/z) = z^n + z^-n`` and ``U_n = T_n' / n``, so that
``{U_n}_{n>=1}`` is orthonormal for the unit-variance semicircle law and
``x U_n(x)`` is monic of degree ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from ._numeric import Scalar, coerce, zero
from .model import ColorModel, WishartParams, wigner_condition
from .poly import PolyFn
from .series import clt_variance, smul


class NotWignerError(ValueError):
    """The model does not satisfy ``D == 0`` and unit weighted row sums."""


# --- Chebyshev polynomials -------------------------------------------------------


@dataclass(frozen=True)
class ChebPoly:
    kind: str
    n: int
    poly: PolyFn
    gamma: Optional[Scalar] = None

    @property
    def coeffs(self) -> tuple:
        return self.poly.coeffs

    def __call__(self, x):
        return self.poly(x)


@lru_cache(maxsize=None)
def _t(n: int) -> PolyFn:
    if n == 0:
        return PolyFn([2])
    if n == 1:
        return PolyFn([0, 1])
    return PolyFn([0, 1]) * _t(n - 1) + PolyFn([-c for c in _t(n - 2).coeffs])


@lru_cache(maxsize=None)
def _u(n: int) -> PolyFn:
    if n == 0:
        return PolyFn([0])
    if n == 1:
        return PolyFn([1])
    return PolyFn([0, 1]) * _u(n - 1) + PolyFn([-c for c in _u(n - 2).coeffs])


def cheb(kind: str, n: int, gamma=None) -> ChebPoly:
    """``kind`` is ``"T"``, ``"U"`` or ``"V"`` (``V_n(x) = x U_n(x^2 - gamma)``)."""
    if n < 1:
        raise ValueError("Chebyshev index starts at 1")
    if kind == "T":
        return ChebPoly("T", n, _t(n))
    if kind == "U":
        return ChebPoly("U", n, _u(n))
    if kind == "V":
        if gamma is None:
            raise ValueError("V_n needs gamma")
        inner = _u(n).shift(-gamma).compose_square()
        return ChebPoly("V", n, PolyFn([0, 1]) * inner, gamma)
    raise ValueError(f"unknown Chebyshev kind {kind!r}")


# --- semicircle moments and inner products --------------------------------------


def semicircle_moment(k: int) -> Fraction:
    if k % 2:
        return Fraction(0)
    n = k // 2
    return Fraction(math.comb(2 * n, n), n + 1)


def semicircle_expectation(g: PolyFn):
    """``E g(S)`` for a standard semicircular ``S``, exact for rational coefficients."""
    return sum(a * semicircle_moment(k) for k, a in enumerate(g.coeffs))


def semicircle_inner(g: PolyFn, n: int):
    """``E g(S) U_n(S)``, computed from Catalan moments (no quadrature)."""
    return semicircle_expectation(g * _u(n))


# --- formal series helpers ----------------------------------------------------------


def catalan_series(n_max: int, exact: bool = True) -> list:
    """``Phi(t) = t + t^3 + 2 t^5 + 5 t^7 + ...`` up to degree ``n_max``."""
    out = [coerce(0, exact)] * (n_max + 1)
    for n in range(n_max + 1):
        if 2 * n + 1 <= n_max:
            out[2 * n + 1] = coerce(Fraction(math.comb(2 * n, n), n + 1), exact)
    return out


def compose(f: Sequence, g: Sequence, n_max: int) -> list:
    """``f(g(t))`` truncated; ``g`` must have zero constant term."""
    if g[0] != 0:
        raise ValueError("inner series must vanish at 0")
    z = 0 * g[1] if len(g) > 1 else 0
    out = [z] * (n_max + 1)
    out[0] = f[0] if f else z
    power = [z] * (n_max + 1)
    power[0] = z + 1
    for k in range(1, min(len(f), n_max + 1)):
        power = smul(power, g, n_max)
        if f[k] != 0:
            out = [a + f[k] * b for a, b in zip(out, power)]
    return out


def geometric_shift(gamma, n_max: int, exact: bool = True, step: int = 1) -> list:
    """``t^step / (1 - gamma t^step)`` as a series."""
    gamma = coerce(gamma, exact)
    out = [coerce(0, exact)] * (n_max + 1)
    k = 1
    while k * step <= n_max:
        out[k * step] = gamma ** (k - 1)
        k += 1
    return out


def phi_shifted(gamma, n_max: int, exact: bool = True, step: int = 1) -> list:
    """``Phi(t^step / (1 - gamma t^step))``."""
    return compose(catalan_series(n_max, exact), geometric_shift(gamma, n_max, exact, step), n_max)


def _series_inverse(a: Sequence, n_max: int) -> list:
    """``1/a`` for a series with ``a[0] != 0``."""
    inv = [0 * a[0]] * (n_max + 1)
    inv[0] = 1 / a[0]
    for n in range(1, n_max + 1):
        acc = 0 * a[0]
        for k in range(1, min(n, len(a) - 1) + 1):
            acc += a[k] * inv[n - k]
        inv[n] = -acc / a[0]
    return inv


def _check_p(p: Sequence) -> None:
    if len(p) < 2 or p[0] != 0 or p[1] != 1:
        raise ValueError("p must have the form t + a_2 t^2 + ...")


def p_chebyshev(p: Sequence, n: int) -> PolyFn:
    """Degree-``n`` polynomial whose value at ``1/t`` is the principal part of ``p(t)^-n``.

    Writing ``p = t (1 + q)``, ``p^-n = t^-n (1 + q)^-n``; the principal part
    keeps the coefficients ``h_0..h_{n-1}`` of ``(1 + q)^-n``.  The result has
    no constant term.
    """
    _check_p(p)
    if len(p) < n + 1:
        raise ValueError(f"p must be known to degree {n}")
    one_plus_q = list(p[1: n + 2]) + [0] * max(0, n + 1 - len(p[1:]))
    inv = _series_inverse(one_plus_q, n)
    h = [0 * inv[0]] * (n + 1)
    h[0] = 0 * inv[0] + 1
    for _ in range(n):
        h = smul(h, inv, n)
    coeffs = [0 * inv[0]] * (n + 1)
    for k in range(n):
        coeffs[n - k] = h[k]
    return PolyFn(coeffs)


@dataclass(frozen=True)
class PMatrix:
    """``P[i-1][j-1]`` is the coefficient of ``t^j`` in ``p(t)^i`` (``1 <= i, j <= size``)."""

    size: int
    entries: tuple
    p: tuple = field(repr=False)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]


def p_matrix(p: Sequence, size: int) -> PMatrix:
    _check_p(p)
    p = list(p[: size + 1]) + [0 * p[1]] * max(0, size + 1 - len(p))
    rows = []
    power = [0 * p[1]] * (size + 1)
    power[0] = 0 * p[1] + 1
    for _ in range(size):
        power = smul(power, p, size)
        rows.append(tuple(power[1: size + 1]))
    return PMatrix(size, tuple(rows), tuple(p))


def lagrange_inverse(P: PMatrix) -> PMatrix:
    """``P^-1`` with column ``n`` equal to the coefficients of ``(1/n) x T_{n,p}'(x)``."""
    size = P.size
    cols = []
    for n in range(1, size + 1):
        t = p_chebyshev(P.p, n)
        col = [0 * P.p[1]] * size
        for k, a in enumerate(t.coeffs):
            if 1 <= k <= size:
                col[k - 1] = k * a / n
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(size)) for i in range(size))
    return PMatrix(size, rows, P.p)


def matmul(A: PMatrix, B: PMatrix) -> list:
    n = A.size
    return [[sum((A[i, k] * B[k, j] for k in range(n)), 0 * A.p[1]) for j in range(n)]
            for i in range(n)]


def chebdiag_pairing(eta: Sequence, gamma, n: int, exact: bool = True):
    """``< sum_i eta_i p(t)^i, t U_n(t - gamma) >`` with ``p = Phi(t/(1 - gamma t))``.

    ``eta`` is indexed from 1 (``eta[0]`` is ignored).
    """
    deg = n
    p = phi_shifted(gamma, deg, exact)
    total = [coerce(0, exact)] * (deg + 1)
    power = [coerce(0, exact)] * (deg + 1)
    power[0] = coerce(1, exact)
    for i in range(1, min(len(eta) - 1, deg) + 1):
        power = smul(power, p, deg)
        total = [a + coerce(eta[i], exact) * b for a, b in zip(total, power)]
    probe = (PolyFn([0, 1]) * _u(n).shift(-coerce(gamma, exact))).coeffs
    return sum((total[k] * probe[k] for k in range(1, min(len(probe), deg + 1))), coerce(0, exact))


def chebdiag_pairing2(eta: Sequence, gamma, m: int, n: int, exact: bool = True):
    """Bivariate version: ``< sum_i eta_i p(x)^i p(y)^i, x U_m(x - gamma) y U_n(y - gamma) >``."""
    deg = max(m, n)
    p = phi_shifted(gamma, deg, exact)
    g = coerce(gamma, exact)
    a = (PolyFn([0, 1]) * _u(m).shift(-g)).coeffs
    b = (PolyFn([0, 1]) * _u(n).shift(-g)).coeffs
    acc = coerce(0, exact)
    power = [coerce(0, exact)] * (deg + 1)
    power[0] = coerce(1, exact)
    for i in range(1, min(len(eta) - 1, deg) + 1):
        power = smul(power, p, deg)
        pa = sum((power[k] * a[k] for k in range(len(a))), coerce(0, exact))
        pb = sum((power[k] * b[k] for k in range(len(b))), coerce(0, exact))
        acc += coerce(eta[i], exact) * pa * pb
    return acc


# --- generalized Wigner --------------------------------------------------------------


@dataclass(frozen=True)
class WignerDiag:
    """``lam[r]``, ``eps[r]`` for ``r = 1..r_max`` (index 0 unused)."""

    lam: tuple
    eps: tuple

    @property
    def r_max(self) -> int:
        return len(self.lam) - 1


def kernel_traces(model: ColorModel, r_max: int) -> list:
    """``(1/r) tr((s2 diag(theta))^r)`` for ``r = 0..r_max`` (entry 0 is 0)."""
    m, ex = model.m, model.exact
    M = [[model.s2[c][k] * model.theta[k] for k in range(m)] for c in range(m)]
    out = [zero(ex)]
    power = M
    for r in range(1, r_max + 1):
        tr = sum((power[c][c] for c in range(m)), zero(ex))
        out.append(tr / r)
        power = [[sum((power[c][k] * M[k][d] for k in range(m)), zero(ex)) for d in range(m)]
                 for c in range(m)]
    return out


def diag_coefficients(model: ColorModel, r_max: int) -> WignerDiag:
    """Bracelet and correction coefficients without checking the Wigner condition."""
    ex = model.exact
    lam = kernel_traces(model, r_max)
    eps = [zero(ex)] * (r_max + 1)
    th = model.theta
    if r_max >= 1:
        eps[1] = sum((th[c] * (model.d2[c] - 2 * model.s2[c][c]) for c in range(model.m)), zero(ex))
    if r_max >= 2:
        half = Fraction(1, 2) if ex else 0.5
        eps[2] = half * sum(
            (th[a] * th[b] * (model.s4[a][b] - 3 * model.s2[a][b] ** 2)
             for a in range(model.m) for b in range(model.m)),
            zero(ex),
        )
    return WignerDiag(tuple(lam), tuple(eps))


def wigner_diag(model: ColorModel, r_max: int) -> WignerDiag:
    if not wigner_condition(model):
        raise NotWignerError("model does not satisfy the generalized Wigner condition")
    return diag_coefficients(model, r_max)


def _fprime_coeffs(f: PolyFn, r_max: int, exact: bool) -> list:
    fp = f.derivative()
    return [None] + [coerce(semicircle_inner(fp, r), exact) for r in range(1, r_max + 1)]


def wigner_variance(model: ColorModel, f: PolyFn, r_max: Optional[int] = None) -> Scalar:
    """``sum_r (2 lam_r + eps_r) (E f'(S) U_r(S))^2``."""
    r_max = r_max or max(f.degree, 1)
    wd = wigner_diag(model, r_max)
    c = _fprime_coeffs(f, r_max, model.exact)
    return sum(((2 * wd.lam[r] + wd.eps[r]) * c[r] ** 2 for r in range(1, r_max + 1)),
               zero(model.exact))


def wigner_mean_shift(model: ColorModel, f: PolyFn) -> Scalar:
    """``sum_r (1/2)(lam_r + eps_r) E f'(S) U_{2r}(S)``."""
    r_max = max(f.degree // 2, 1)
    wd = wigner_diag(model, r_max)
    fp = f.derivative()
    half = Fraction(1, 2) if model.exact else 0.5
    return sum(
        (half * (wd.lam[r] + wd.eps[r]) * coerce(semicircle_inner(fp, 2 * r), model.exact)
         for r in range(1, r_max + 1)),
        zero(model.exact),
    )


def chebyshev_coefficient_c1(fprime: Callable[[float], float], r: int,
                             breakpoints: Sequence[float] = ()) -> float:
    """``E f'(S) U_r(S)`` by quadrature, for ``f'`` only piecewise smooth.

    With ``S = 2 cos(th)``, ``U_r(S) = sin(r th)/sin(th)`` and the semicircle
    weight becomes ``(2/pi) sin(th)^2 dth`` on ``[0, pi]``.
    """
    pts = sorted(math.acos(max(-1.0, min(1.0, b / 2))) for b in breakpoints if -2 < b < 2)
    val, _ = integrate.quad(
        lambda th: fprime(2 * math.cos(th)) * math.sin(r * th) * math.sin(th),
        0.0, math.pi, points=pts or None, limit=400, epsabs=1e-13,
    )
    return 2 / math.pi * val


def wigner_variance_c1(model: ColorModel, fprime: Callable[[float], float],
                       breakpoints: Sequence[float] = (), r_max: int = 200) -> float:
    """Closed-form variance for a piecewise-C1 test function (truncated at ``r_max``)."""
    wd = wigner_diag(model.as_float(), r_max)
    return sum((2 * wd.lam[r] + wd.eps[r]) * chebyshev_coefficient_c1(fprime, r, breakpoints) ** 2
               for r in range(1, r_max + 1))


# --- densities ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensitySpec:
    """A limiting spectral law: point atoms plus an absolutely continuous part.

    ``integrate(f)`` evaluates ``<law, f>`` with the square-root endpoint
    singularities removed by a cosine substitution.
    """

    kind: str
    gamma: float = 2.0
    atoms: tuple = ()

    def support(self) -> list:
        g = self.gamma
        if self.kind in ("semicircle", "wigner-limit"):
            return [(-2.0, 2.0)]
        if self.kind == "wishart-muW":
            return [(g - 2, g + 2)]
        lo, hi = math.sqrt(max(g - 2, 0.0)), math.sqrt(g + 2)
        return [(-hi, -lo), (lo, hi)]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        g = self.gamma
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.kind in ("semicircle", "wigner-limit"):
                out = np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * math.pi)
            elif self.kind == "wishart-muW":
                c = (g + math.sqrt(g * g - 4)) / (4 * math.pi)
                out = c * np.sqrt(np.clip(4 - (x - g) ** 2, 0, None)) / x
                out = np.where(np.abs(x - g) < 2, out, 0.0)
            elif self.kind in ("wishart-mu", "wishart-nu"):
                c = 1 / (g * math.pi) if self.kind == "wishart-mu" else 1 / (2 * math.pi)
                out = c * np.sqrt(np.clip(4 - (x**2 - g) ** 2, 0, None)) / np.abs(x)
                out = np.where(np.abs(x**2 - g) < 2, out, 0.0)
            else:
                raise ValueError(self.kind)
        return np.nan_to_num(out)

    def integrate(self, f: Callable, epsabs: float = 1e-13) -> float:
        g = self.gamma
        if self.kind in ("semicircle", "wigner-limit"):
            body = lambda th: f(2 * math.cos(th)) * 2 / math.pi * math.sin(th) ** 2
        elif self.kind == "wishart-muW":
            c = (g + math.sqrt(g * g - 4)) / (4 * math.pi)

            def body(th):
                x = g - 2 + 4 * math.cos(th / 2) ** 2
                return c * f(x) * 4 * math.sin(th) ** 2 / x
        elif self.kind in ("wishart-mu", "wishart-nu"):
            c = 1 / (g * math.pi) if self.kind == "wishart-mu" else 1 / (2 * math.pi)

            def body(th):
                u = g - 2 + 4 * math.cos(th / 2) ** 2
                r = math.sqrt(u)
                return c * (f(r) + f(-r)) * 2 * math.sin(th) ** 2 / u
        else:
            raise ValueError(self.kind)
        val, _ = integrate.quad(body, 0.0, math.pi, epsabs=epsabs, epsrel=1e-13, limit=400)
        return val + sum(m * f(x) for x, m in self.atoms)

    def mass(self) -> float:
        return self.integrate(lambda x: 1.0)

    def moment(self, k: int) -> float:
        return self.integrate(lambda x: x**k)


def semicircle_density() -> DensitySpec:
    return DensitySpec("semicircle", 2.0)


@dataclass(frozen=True)
class WishartClosedForms:
    phi_theta: list
    phiA_phiB: list
    mu: DensitySpec
    muW: DensitySpec
    nu: DensitySpec


def wishart_closed_forms(params: WishartParams, n_max: int = 16) -> WishartClosedForms:
    """Series ``sum_c theta(c) Phi(c,t) = t(1 + (2/gamma) Phi(t^2/(1-gamma t^2)))``,
    ``Phi_A Phi_B = Phi(t^2/(1-gamma t^2))`` and the limiting laws of ``X`` and ``W``."""
    exact = isinstance(params.gamma, Fraction)
    gamma = params.gamma
    ab = phi_shifted(gamma, n_max, exact, step=2)
    two_over = 2 / gamma
    theta_series = [coerce(0, exact)] * (n_max + 1)
    if n_max >= 1:
        theta_series[1] = coerce(1, exact)
    for k in range(n_max):
        theta_series[k + 1] += two_over * ab[k]
    gf = float(gamma)
    atom = math.sqrt(max(0.0, 1 - 4 / gf**2))
    return WishartClosedForms(
        theta_series,
        ab,
        DensitySpec("wishart-mu", gf, ((0.0, atom),) if atom > 0 else ()),
        DensitySpec("wishart-muW", gf),
        DensitySpec("wishart-nu", gf),
    )


def wishart_semicircle_coefficient(g: PolyFn, gamma, r: int):
    """``E g'(S + gamma) U_r(S)``."""
    return semicircle_inner(g.derivative().shift(gamma), r)


def wishart_variance(model: ColorModel, params: WishartParams, g: PolyFn) -> Scalar:
    """Limiting variance of ``trace g(W) - E trace g(W)`` for ``W = Y Y^T``:
    ``sum_r (2 lam_{2r} + eps_{2r}) (E g'(S + gamma) U_r(S))^2``."""
    if g.coeffs[0] != 0:
        raise ValueError("g must vanish at the origin")
    if g.degree <= 0:
        return zero(model.exact)
    r_max = g.degree
    dc = diag_coefficients(model, 2 * r_max)
    gamma = coerce(params.gamma, model.exact)
    total = zero(model.exact)
    for r in range(1, r_max + 1):
        c = wishart_semicircle_coefficient(PolyFn([coerce(a, model.exact) for a in g.coeffs]),
                                           gamma, r)
        total += (2 * dc.lam[2 * r] + dc.eps[2 * r]) * c**2
    return total


def wishart_variance_via_series(model: ColorModel, g: PolyFn) -> Scalar:
    """Bookkeeping route: ``Z_{g,W} = Z_{g(x^2)} / 2``, so the variance is a quarter."""
    if g.coeffs[0] != 0:
        raise ValueError("g must vanish at the origin")
    gt = g.compose_square()
    if gt.degree <= 0:
        return zero(model.exact)
    quarter = Fraction(1, 4) if model.exact else 0.25
    return quarter * clt_variance(model, gt)


def density_for_model(model: ColorModel, kind: Optional[str] = None) -> DensitySpec:
    """Closed-form limiting law when the model is generalized Wigner or bipartite Wishart."""
    if wigner_condition(model) and kind in (None, "semicircle", "wigner-limit"):
        return semicircle_density()
    w = detect_wishart(model)
    if w is not None:
        forms = wishart_closed_forms(w, 2)
        if kind in (None, "wishart-mu"):
            return forms.mu
        if kind == "wishart-muW":
            return forms.muW
    raise NotWignerError("no closed-form density for this model")


def detect_wishart(model: ColorModel) -> Optional[WishartParams]:
    """Recognize a bipartite model with the Wishart row-sum structure."""
    m = model.m
    if any(v != 0 for v in model.D) or any(v != 0 for v in model.d2):
        return None
    # two-color the graph of nonzero s2 entries
    side = {0: 0}
    stack = [0]
    while stack:
        c = stack.pop()
        for k in range(m):
            if model.s2[c][k] != 0:
                if k == c:
                    return None
                if k in side:
                    if side[k] == side[c]:
                        return None
                else:
                    side[k] = 1 - side[c]
                    stack.append(k)
    if len(side) != m:
        return None
    A = [c for c in range(m) if side[c] == 0]
    B = [c for c in range(m) if side[c] == 1]
    tA = sum(model.theta[c] for c in A)
    tB = sum(model.theta[c] for c in B)
    if tA > tB:
        A, B, tA, tB = B, A, tB, tA
    exact = model.exact
    try:
        from ._numeric import sqrt
        alpha = sqrt(tB / tA, exact)
    except Exception:
        if not exact:
            return None
        alpha = math.sqrt(tB / tA)
        exact = False
    beta = 1 / alpha

    def close(a, b):
        return a == b if exact else abs(float(a) - float(b)) < 1e-12

    for b in B:
        if not close(sum(model.s2[b][a] * model.theta[a] for a in A), beta):
            return None
    for a in A:
        if not close(sum(model.s2[a][b] * model.theta[b] for b in B), alpha):
            return None
    return WishartParams(tA, alpha, beta, alpha + beta, tuple(A), tuple(B))
