"""Limiting spectra and linear-statistic CLTs for colored band random matrices.

Modules
-------
model
    Color models, colorings and the bipartite Wishart construction.
words, enumeration
    Word and sentence combinatorics with brute-force class enumeration.
series
    Truncated generating series: moments, CLT variance and mean shift.
closedform
    Chebyshev diagonalization, Lagrange inversion and Wishart closed forms.
simulate
    Matrix sampling, eigenvalues and Monte Carlo CLT checks.
cli
    The ``bandclt`` command.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ColorModel,
    LetterColoring,
    WishartParams,
    empirical_theta,
    support_bound,
    unit_wigner,
    validate_model,
    wigner_condition,
    wishart_model,
)
from .poly import PiecewisePoly, PolyFn  # noqa: E402
from .series import clt_covariance, clt_variance, mean_shift, mu_moments, phi  # noqa: E402

__all__ = [
    "ColorModel",
    "LetterColoring",
    "PiecewisePoly",
    "PolyFn",
    "WishartParams",
    "__version__",
    "clt_covariance",
    "clt_variance",
    "empirical_theta",
    "mean_shift",
    "mu_moments",
    "phi",
    "support_bound",
    "unit_wigner",
    "validate_model",
    "wigner_condition",
    "wishart_model",
]
