"""Log-space combinatorics shared by the design formulas and experiment code.

Binomial and hypergeometric weights are built from log-gamma sums and groups of
terms are combined by exponentiating against the largest exponent, so the same
code stays finite for n up to 1e6.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln


def log_comb(n, k):
    """log C(n, k), elementwise; -inf outside 0 <= k <= n."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore"):
        out = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    return np.where((k < 0) | (k > n), -np.inf, out)


def hypergeom_log_pmf(n: int, d: int, chi, a) -> np.ndarray:
    """log P(A = a) for A hypergeometric with population n, d marked, draw chi.

    Broadcasts over chi and a.
    """
    chi = np.asarray(chi)
    a = np.asarray(a)
    return log_comb(d, a) + log_comb(n - d, chi - a) - log_comb(n, chi)


def hypergeom_support(n: int, d: int, chi: int) -> tuple[int, int]:
    """Inclusive (lo, hi) range of possible marked counts in a draw of chi."""
    return max(0, chi - (n - d)), min(d, chi)
