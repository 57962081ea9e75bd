"""Sampling colored band matrices, spectral statistics and Monte Carlo CLT checks.

Every replicate ``i`` of a run seeded with ``seed`` draws from its own stream
``SeedSequence(seed, spawn_key=(0, i))``; the bootstrap uses the separate
stream ``spawn_key=(1,)``.  Results therefore do not depend on how replicates
are split among worker processes.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from . import __version__
from ._numeric import zero
from .closedform import NotWignerError, wigner_variance_c1
from .enumeration import canonical_words
from .model import ColorModel, LetterColoring, empirical_theta, support_bound
from .poly import PiecewisePoly, PolyFn
from .series import clt_variance, mean_shift, mu_moments

WORKERS_ENV = "BANDCLT_WORKERS"
ENTRY_KINDS = ("gaussian", "three_point")
FLOAT_TOL = 1e-12

TestFunction = Union[PolyFn, PiecewisePoly]


class SimulationError(RuntimeError):
    """A Monte Carlo run could not be completed."""


class EigenError(SimulationError):
    """The Jacobi iteration did not converge."""

    def __init__(self, residual: float, sweeps: int):
        self.residual, self.sweeps = residual, sweeps
        super().__init__(f"Jacobi did not converge in {sweeps} sweeps (residual {residual:.3e})")


class MomentOrderError(ValueError):
    """A term needs a moment the model does not declare."""


# --- entry laws ----------------------------------------------------------------


@dataclass(frozen=True)
class EntryLaw:
    """Centered symmetric law with variance ``v`` and fourth moment ``m4``.

    ``three_point`` puts mass ``p = v^2/(2 m4)`` at each of ``+-a`` with
    ``a^2 = m4/v`` and the rest at 0.
    """

    kind: str
    variance: float
    fourth: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ENTRY_KINDS:
            raise ValueError(f"unknown entry law {self.kind!r}")
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")
        if self.kind == "three_point" and self.variance > 0:
            if self.fourth is None or self.fourth < self.variance**2:
                raise ValueError("three_point needs m4 >= v^2")

    @property
    def a(self) -> float:
        return math.sqrt(self.fourth / self.variance) if self.variance > 0 else 0.0

    @property
    def p(self) -> float:
        return self.variance**2 / (2 * self.fourth) if self.variance > 0 else 0.0

    def moments(self) -> tuple:
        """``(E xi, E xi^2, E xi^3, E xi^4)``."""
        if self.kind == "gaussian":
            return (0.0, self.variance, 0.0, 3 * self.variance**2)
        return (0.0, self.variance, 0.0, self.fourth if self.variance > 0 else 0.0)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return math.sqrt(self.variance) * rng.standard_normal(size)
        u = rng.random(size)
        return self.a * ((u < self.p).astype(float) - ((u >= self.p) & (u < 2 * self.p)))


# --- matrices --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixSample:
    N: int
    X: np.ndarray
    seed: object
    coloring: LetterColoring = field(repr=False)

    def __post_init__(self):
        self.X.flags.writeable = False


def _float_arrays(model: ColorModel, coloring: LetterColoring):
    coloring.check(model.m)
    c = np.asarray(coloring.colors, dtype=int)
    s2 = np.array([[float(v) for v in row] for row in model.s2])
    s4 = np.array([[float(v) for v in row] for row in model.s4])
    D = np.array([float(v) for v in model.D])
    d2 = np.array([float(v) for v in model.d2])
    return c, D, d2, s2, s4


def gaussian_consistent(model: ColorModel) -> bool:
    for i in range(model.m):
        for j in range(model.m):
            a, b = model.s4[i][j], 3 * model.s2[i][j] ** 2
            if (a != b) if model.exact else abs(a - b) > FLOAT_TOL * max(1.0, abs(b)):
                return False
    return True


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_matrix(model: ColorModel, coloring: LetterColoring, entry_kind: str = "gaussian",
                  seed=0) -> MatrixSample:
    """Draw ``X_ab = D(c_a) delta_ab + N^{-1/2} xi_ab`` with independent upper-triangle entries.

    Diagonal entries use the same law family with variance ``d2`` (fourth
    moment ``3 d2^2`` for ``three_point``).
    """
    if entry_kind not in ENTRY_KINDS:
        raise ValueError(f"unknown entry law {entry_kind!r}")
    N = coloring.N
    if N == 0:
        raise ValueError("N must be positive")
    if entry_kind == "gaussian" and not gaussian_consistent(model):
        raise ValueError("gaussian entries force s4 = 3 s2^2; use entry_kind='three_point'")
    c, D, d2, s2, s4 = _float_arrays(model, coloring)
    rng = _rng(seed)
    V = s2[np.ix_(c, c)]
    if entry_kind == "gaussian":
        xi = rng.standard_normal((N, N)) * np.sqrt(V)
        dg = rng.standard_normal(N) * np.sqrt(d2[c])
    else:
        M4 = s4[np.ix_(c, c)]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(V > 0, np.sqrt(M4 / np.where(V > 0, V, 1)), 0.0)
            p = np.where(V > 0, V**2 / (2 * np.where(M4 > 0, M4, 1)), 0.0)
        u = rng.random((N, N))
        xi = a * ((u < p).astype(float) - ((u >= p) & (u < 2 * p)))
        ud = rng.random(N)
        ad, pd = np.sqrt(3 * d2[c]), np.where(d2[c] > 0, 1 / 6, 0.0)
        dg = ad * ((ud < pd).astype(float) - ((ud >= pd) & (ud < 2 * pd)))
    upper = np.triu(xi, 1)
    X = (upper + upper.T) / math.sqrt(N)
    X[np.diag_indices(N)] = D[c] + dg / math.sqrt(N)
    return MatrixSample(N, X, seed if not isinstance(seed, np.random.Generator) else None,
                        coloring)


def _matrix(X) -> np.ndarray:
    return X.X if isinstance(X, MatrixSample) else np.asarray(X, dtype=float)


def trace_poly(X, f: PolyFn) -> float:
    """``sum_k a_k trace(X^k)`` with powers built by repeated multiplication."""
    A = _matrix(X)
    coeffs = [float(a) for a in f.coeffs]
    total = coeffs[0] * A.shape[0]
    power = None
    for k in range(1, len(coeffs)):
        # trace(P X) for symmetric X is the elementwise sum of P * X
        tr = float(np.trace(A)) if power is None else float(np.sum(power * A))
        total += coeffs[k] * tr
        if k < len(coeffs) - 1:
            power = A.copy() if power is None else power @ A
    return total


def jacobi_eigenvalues(A, tol: float = 1e-12, max_sweeps: int = 50) -> np.ndarray:
    """Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below
    ``tol * ||A||_F``; returns eigenvalues in ascending order."""
    A = np.array(_matrix(A), dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.empty(0)
    scale = float(np.linalg.norm(A))
    target = tol * scale
    off = lambda M: math.sqrt(2 * float(np.sum(np.triu(M, 1) ** 2)))  # noqa: E731
    for sweep in range(max_sweeps + 1):
        if off(A) <= target:
            return np.sort(np.diag(A))
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                th = (A[q, q] - A[p, p]) / (2 * apq)
                if abs(th) > 1e150:
                    t = 0.5 / th
                else:
                    t = (1.0 if th >= 0 else -1.0) / (abs(th) + math.sqrt(th * th + 1))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
    raise EigenError(off(A) / scale if scale else 0.0, max_sweeps)


def eigenvalues(X, method: str = "jacobi") -> np.ndarray:
    """Ascending eigenvalues; ``method`` is ``"jacobi"`` or ``"lapack"``."""
    if method == "jacobi":
        return jacobi_eigenvalues(X)
    if method == "lapack":
        return np.linalg.eigvalsh(_matrix(X))
    raise ValueError(f"unknown eigensolver {method!r}")


def evaluate_statistic(X, f: TestFunction, eigensolver: str = "lapack") -> float:
    if isinstance(f, PolyFn):
        return trace_poly(X, f)
    return float(np.sum(f(eigenvalues(X, eigensolver))))


# --- Monte Carlo -----------------------------------------------------------------


def replicate_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, i)))


def bootstrap_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run_chunk(args):
    model, coloring, fs, entry_kind, seed, indices, eigensolver = args
    rows, failed = [], 0
    for i in indices:
        X = sample_matrix(model, coloring, entry_kind, replicate_rng(seed, i))
        try:
            rows.append([evaluate_statistic(X, f, eigensolver) for f in fs])
        except (EigenError, np.linalg.LinAlgError):
            rows.append([math.nan] * len(fs))
            failed += 1
    return rows, failed


def replicate_statistics(model: ColorModel, coloring: LetterColoring, fs: Sequence[TestFunction],
                         R: int, seed: int, entry_kind: str = "gaussian",
                         eigensolver: str = "lapack", workers: Optional[int] = None):
    """``R x len(fs)`` array of ``trace f(X)`` values plus the number of failed replicates."""
    workers = workers or default_workers()
    model = model.as_float()
    idx = list(range(R))
    if workers <= 1:
        rows, failed = _run_chunk((model, coloring, fs, entry_kind, seed, idx, eigensolver))
    else:
        size = math.ceil(R / workers)
        chunks = [idx[k: k + size] for k in range(0, R, size)]
        rows, failed = [], 0
        with ProcessPoolExecutor(max_workers=workers) as ex:
            jobs = [(model, coloring, fs, entry_kind, seed, ch, eigensolver) for ch in chunks]
            for r, fl in ex.map(_run_chunk, jobs):
                rows.extend(r)
                failed += fl
    return np.array(rows, dtype=float).reshape(R, len(fs)), failed


def bootstrap_variance_ci(values: np.ndarray, seed: int, n_boot: int = 2000, level: float = 0.95):
    """Percentile bootstrap of the ``(R-1)``-normalized variance: ``(low, high, se)``."""
    rng = bootstrap_rng(seed)
    R = len(values)
    boots = np.empty(n_boot)
    # resample in blocks to keep memory bounded
    step = max(1, 2_000_000 // max(R, 1))
    for start in range(0, n_boot, step):
        stop = min(n_boot, start + step)
        idx = rng.integers(0, R, size=(stop - start, R))
        boots[start:stop] = np.var(values[idx], axis=1, ddof=1)
    alpha = (1 - level) / 2
    low, high = np.quantile(boots, [alpha, 1 - alpha])
    return float(low), float(high), float(np.std(boots, ddof=1))


@dataclass(frozen=True)
class SimulationReport:
    """Outcome of a Monte Carlo run for one test function.

    ``traces`` holds the per-replicate ``trace f(X)`` values, so the
    variance and the bootstrap interval can be recomputed from the report.
    Centering uses the replicate mean.
    """

    f: str
    N: int
    R: int
    seed: int
    entry_kind: str
    n_boot: int
    level: float
    traces: tuple
    mean: float
    variance: float
    ci_low: float
    ci_high: float
    se: float
    skewness: float
    excess_kurtosis: float
    predicted_variance: Optional[float]
    predicted_mean_shift: Optional[float]
    z: Optional[float]
    n_failed: int
    model_hash: str
    runtime: float = 0.0
    centering: str = "replicate mean"
    version: str = __version__

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    @property
    def prediction_in_ci(self) -> Optional[bool]:
        if self.predicted_variance is None:
            return None
        return self.ci_low <= self.predicted_variance <= self.ci_high

    def to_dict(self) -> dict:
        d = asdict(self)
        d["traces"] = list(self.traces)
        d["half_width"] = self.half_width
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationReport":
        d = dict(d)
        d.pop("half_width", None)
        d["traces"] = tuple(d["traces"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SimulationReport":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> dict:
        """Everything except the wall-clock runtime."""
        d = self.to_dict()
        d.pop("runtime")
        return d

    def recompute_ci(self) -> tuple:
        return bootstrap_variance_ci(np.asarray(self.traces), self.seed, self.n_boot, self.level)


def function_spec(f: TestFunction) -> str:
    return f.spec()


def predicted_values(model: ColorModel, f: TestFunction) -> tuple:
    """``(variance, mean_shift)`` limits, ``None`` where no formula applies."""
    if isinstance(f, PolyFn):
        if f.degree < 1:
            return 0.0, 0.0
        return float(clt_variance(model, f)), float(mean_shift(model, f))
    try:
        bps = [float(b) for b in f.breakpoints]
        return wigner_variance_c1(model, f.derivative_at, bps), None
    except NotWignerError:
        return None, None


def _summarize(values, f, N, R, seed, entry_kind, n_boot, level, failed, model, runtime):
    good = values[~np.isnan(values)]
    var = float(np.var(good, ddof=1))
    low, high, se = bootstrap_variance_ci(good, seed, n_boot, level)
    pv, pm = predicted_values(model, f)
    z = (var - pv) / se if pv is not None and se > 0 else None
    if np.std(good) > 0:
        sk = float(stats.skew(good))
        ku = float(stats.kurtosis(good, fisher=True))
    else:
        sk = ku = 0.0
    return SimulationReport(
        function_spec(f), N, R, seed, entry_kind, n_boot, level, tuple(float(v) for v in values),
        float(np.mean(good)), var, low, high, se, sk, ku, pv, pm, z, failed, model.hash(), runtime,
    )


def mc_clt_many(model: ColorModel, coloring: Optional[LetterColoring], fs: Sequence[TestFunction],
                N: Optional[int] = None, R: int = 2000, seed: int = 0,
                entry_kind: str = "gaussian", workers: Optional[int] = None,
                n_boot: int = 2000, level: float = 0.95,
                eigensolver: str = "lapack") -> list:
    """Run one Monte Carlo experiment and report on several test functions of the same samples."""
    if R < 100:
        raise ValueError(f"R too small: need R >= 100, got {R}")
    if coloring is None:
        if N is None:
            raise ValueError("give a coloring or N")
        coloring = LetterColoring.proportional(model.theta, N)
    elif N is not None and N != coloring.N:
        raise ValueError(f"N = {N} does not match the coloring (N = {coloring.N})")
    start = time.perf_counter()
    values, failed = replicate_statistics(model, coloring, fs, R, seed, entry_kind, eigensolver,
                                          workers)
    if failed > 0.01 * R:
        raise SimulationError(f"{failed} of {R} replicates failed (more than 1%)")
    runtime = time.perf_counter() - start
    return [
        _summarize(values[:, k], f, coloring.N, R, seed, entry_kind, n_boot, level, failed, model,
                   runtime)
        for k, f in enumerate(fs)
    ]


def mc_clt(model: ColorModel, coloring: Optional[LetterColoring], f: TestFunction,
           N: Optional[int] = None, R: int = 2000, seed: int = 0, **kw) -> SimulationReport:
    return mc_clt_many(model, coloring, [f], N, R, seed, **kw)[0]


# --- finite-N oracles ----------------------------------------------------------------


def _falling(n: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= n - j
    return out


def _entry_moment(model: ColorModel, a: int, b: int, k: int):
    """``E xi^k`` for an entry joining colors ``a`` and ``b`` (diagonal if ``a is b``)."""
    ex = model.exact
    if k == 0:
        return 1 if ex else 1.0
    if k % 2:
        return zero(ex)
    if k == 2:
        return model.s2[a][b]
    if k == 4:
        return model.s4[a][b]
    raise MomentOrderError(f"moment of order {k} is not declared")


def _diag_moment(model: ColorModel, c: int, k: int, diag_fourth):
    ex = model.exact
    if k == 0:
        return 1 if ex else 1.0
    if k % 2:
        return zero(ex)
    if k == 2:
        return model.d2[c]
    if k == 4:
        if model.d2[c] == 0:
            return zero(ex)
        if diag_fourth is None:
            raise MomentOrderError("term needs the diagonal fourth moment; pass diag_fourth")
        return diag_fourth[c]
    raise MomentOrderError(f"diagonal moment of order {k} is not declared")


def exact_expected_trace(model: ColorModel, coloring: LetterColoring, n: int,
                         diag_fourth: Optional[Sequence] = None):
    """Exact ``E trace X^n`` at finite ``N`` from the closed-word expansion.

    Each closed word of length ``n + 1`` is summed over injective letter
    assignments; a diagonal step contributes either ``D`` or a noise factor.
    Both entry laws are symmetric, so odd moments vanish.  ``diag_fourth``
    is only needed when ``n = 4`` and some ``d2`` is nonzero.
    """
    if not 0 <= n <= 4:
        raise ValueError("exact_expected_trace supports n <= 4")
    N = coloring.N
    if N > 64:
        raise ValueError("exact_expected_trace supports N <= 64")
    coloring.check(model.m)
    ex = model.exact
    cnt = [0] * model.m
    for c in coloring.colors:
        cnt[c] += 1
    if n == 0:
        return Fraction(N) if ex else float(N)
    root_n = None if ex else math.sqrt(N)
    total = zero(ex)
    for w in canonical_words(n + 1, closed=True):
        k = max(w)
        diag_steps = [s for s in range(n) if w[s] == w[s + 1]]
        for colors in np.ndindex(*([model.m] * k)):
            mult = 1
            for c in range(model.m):
                mult *= _falling(cnt[c], colors.count(c))
            if mult == 0:
                continue
            col = lambda a: colors[a - 1]  # noqa: E731
            for mask in range(1 << len(diag_steps)):
                noise = {}
                dfac = 1 if ex else 1.0
                nsteps = 0
                for s in range(n):
                    a, b = w[s], w[s + 1]
                    if a == b:
                        j = diag_steps.index(s)
                        if not mask >> j & 1:
                            dfac *= model.D[col(a)]
                            continue
                    key = (min(a, b), max(a, b))
                    noise[key] = noise.get(key, 0) + 1
                    nsteps += 1
                if dfac == 0 or nsteps % 2:
                    continue
                term = dfac
                for (a, b), kk in noise.items():
                    if a == b:
                        term *= _diag_moment(model, col(a), kk, diag_fourth)
                    else:
                        term *= _entry_moment(model, col(a), col(b), kk)
                    if term == 0:
                        break
                if term == 0:
                    continue
                scale = Fraction(1, N ** (nsteps // 2)) if ex else 1 / root_n**nsteps
                total += mult * term * scale
    return total


@dataclass(frozen=True)
class MeanShiftCheck:
    N: int
    exact_shift: object
    predicted_limit: object
    predicted_at_theta_N: object

    @property
    def gap(self):
        return self.exact_shift - self.predicted_limit


def finite_n_shift(model: ColorModel, coloring: LetterColoring, f: PolyFn,
                   diag_fourth: Optional[Sequence] = None):
    """``E trace f(X) - N <mu_N, f>`` with ``mu_N`` built from the empirical color weights."""
    if f.degree > 4:
        raise ValueError("deg f must be <= 4")
    theta_n = empirical_theta(coloring, model.m)
    mN = model.with_theta(theta_n)
    mom = mu_moments(mN, n_max=max(f.degree, 0))
    N = coloring.N
    total = zero(model.exact)
    for k, a in enumerate(f.coeffs):
        if a != 0:
            a = Fraction(a) if model.exact else float(a)
            total += a * (exact_expected_trace(model, coloring, k, diag_fourth) - N * mom[k])
    return total


def mean_shift_check(model: ColorModel, coloring: LetterColoring, f: PolyFn,
                     diag_fourth: Optional[Sequence] = None) -> MeanShiftCheck:
    theta_n = empirical_theta(coloring, model.m)
    return MeanShiftCheck(
        coloring.N,
        finite_n_shift(model, coloring, f, diag_fourth),
        mean_shift(model, f) if f.degree >= 1 else zero(model.exact),
        mean_shift(model.with_theta(theta_n), f) if f.degree >= 1 else zero(model.exact),
    )


@dataclass(frozen=True)
class ConcentrationRow:
    N: int
    variance: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ConcentrationTable:
    rows: tuple

    @property
    def max_variance(self) -> float:
        return max(r.variance for r in self.rows)

    def no_increasing_trend(self, factor: float = 2.0) -> bool:
        """Variance at the largest ``N`` is at most ``factor`` times the upper CI
        bound at the smallest ``N``."""
        lo = min(self.rows, key=lambda r: r.N)
        hi = max(self.rows, key=lambda r: r.N)
        return hi.variance <= factor * lo.ci_high


def concentration_check(model: ColorModel, g: TestFunction, Ns: Sequence[int], R: int = 500,
                        seed: int = 0, workers: Optional[int] = None,
                        n_boot: int = 2000) -> ConcentrationTable:
    """Empirical ``Var trace g(X)`` across matrix sizes with Gaussian entries."""
    if not gaussian_consistent(model):
        raise ValueError("concentration_check needs Gaussian entries (s4 = 3 s2^2)")
    rows = []
    for k, N in enumerate(Ns):
        coloring = LetterColoring.proportional(model.theta, N)
        values, failed = replicate_statistics(model, coloring, [g], R, seed + k, "gaussian",
                                              "lapack", workers)
        if failed > 0.01 * R:
            raise SimulationError(f"{failed} of {R} replicates failed (more than 1%)")
        v = values[:, 0]
        v = v[~np.isnan(v)]
        low, high, _ = bootstrap_variance_ci(v, seed + k, n_boot)
        rows.append(ConcentrationRow(N, float(np.var(v, ddof=1)), low, high))
    return ConcentrationTable(tuple(rows))


def evaluation_window(model: ColorModel) -> tuple:
    """``[-C - 1, C + 1]`` with ``C`` the support bound of the limiting law."""
    C = float(support_bound(model))
    return -C - 1, C + 1
