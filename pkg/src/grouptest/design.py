"""Design parameters for the Bernoulli pooling scheme.

Everything derivable from (f, q, n, eps): the four conditional positivity
probabilities, the sensitivity gaps, the participation parameters and test
count, the grid search for the best participation probability q, plus the
sensitivity parameter H(f), the concentration parameter h(f), the
information-theoretic lower bound on tests and the tightness diagnostics.

Conventions: "log" in the test-count formulas is base 2 (the constants 8.32 =
12 ln 2 and 36.06 fold the natural-log Chernoff exponents into base-2 logs);
q-grid and pool-size argmin ties break toward the smallest candidate, so all
outputs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, DegenerateSensitivity, ParameterOutOfRange
from .functions import TestFunction
from .numerics import hypergeom_support, log_comb

# Window that provably brackets the optimal q: (1/(W d^3), 1 - 1/(W d^3)).
Q_WINDOW_SCALE = 376017

_LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class DesignPoint:
    """All scheme quantities at a fixed participation probability q."""

    q: float
    p_minus: float  # positive-test probability, item in test, non-defective
    p_plus: float   # positive-test probability, item in test, defective
    q_minus: float  # positive-test probability, item out of test, non-defective
    q_plus: float   # positive-test probability, item out of test, defective
    delta: float    # p_plus - p_minus, computed in increment form
    nabla: float    # q_minus - q_plus = q/(1-q) * delta
    p_min: float    # min(p_plus, 1 - q_plus)
    m: float        # tests each item should participate in
    s: float        # tests each item should be excluded from
    t_of_q: float   # total tests prescribed at this q
    gamma_hat: float  # p_min-free surrogate objective for the q search


def _weights_d_minus_1(f: TestFunction, q: float):
    """Log-space Binomial(d-1, q) weights and the shared increment sum.

    Returns (w1, inc_sum) where w1[j] = C(d-1,j) q^j (1-q)^(d-1-j) and
    inc_sum = sum_j w1[j] (f(j+1) - f(j)). Terms are exponentiated against
    the largest exponent so the sums stay accurate when individual weights
    underflow.
    """
    d = f.d
    j = np.arange(d)
    lw = log_comb(d - 1, j) + j * math.log(q) + (d - 1 - j) * math.log1p(-q)
    m = lw.max()
    w1 = np.exp(lw - m) * math.exp(m) if np.isfinite(m) else np.zeros(d)
    inc_sum = float(w1 @ f.increments())
    return w1, inc_sum


def positivity_probabilities(f: TestFunction, q: float):
    """(p_minus, p_plus, q_minus, q_plus) at participation probability q."""
    if not 0.0 < q < 1.0:
        raise ParameterOutOfRange(f"q must be in (0,1), got {q}")
    d = f.d
    w1, _ = _weights_d_minus_1(f, q)
    p_plus = float(w1 @ f.values[1:])
    q_plus = float(w1 @ f.values[:-1])
    j = np.arange(d + 1)
    lw0 = log_comb(d, j) + j * math.log(q) + (d - j) * math.log1p(-q)
    m0 = lw0.max()
    w0 = np.exp(lw0 - m0) * math.exp(m0)
    p_minus = float(w0 @ f.values)
    return p_minus, p_plus, p_minus, q_plus


def design_point(f: TestFunction, q: float, n: int, eps: float) -> DesignPoint:
    """Evaluate every design quantity at the given q.

    delta comes from the increment sum (1-q) * sum_j C(d-1,j) q^j (1-q)^(d-1-j)
    * (f(j+1) - f(j)), never from subtracting the two positivity
    probabilities; nabla scales the same sum by q.
    """
    if not 0.0 < q < 1.0:
        raise ParameterOutOfRange(f"q must be in (0,1), got {q}")
    if n <= f.d:
        raise ParameterOutOfRange(f"need n > d, got n={n}, d={f.d}")
    if not 0.0 < eps < 1.0:
        raise ParameterOutOfRange(f"eps must be in (0,1), got {eps}")
    w1, inc_sum = _weights_d_minus_1(f, q)
    delta = (1.0 - q) * inc_sum
    nabla = q * inc_sum
    if delta <= 0.0:
        raise DegenerateSensitivity(
            f"delta underflowed to zero at q={q}; f is constant on the "
            "reachable range at this q"
        )
    p_plus = float(w1 @ f.values[1:])
    q_plus = float(w1 @ f.values[:-1])
    one_minus_q_plus = float(w1 @ (1.0 - f.values[:-1]))
    p_min = min(p_plus, one_minus_q_plus)
    j = np.arange(f.d + 1)
    lw0 = log_comb(f.d, j) + j * math.log(q) + (f.d - j) * math.log1p(-q)
    m0 = lw0.max()
    w0 = np.exp(lw0 - m0) * math.exp(m0)
    p_minus = float(w0 @ f.values)

    log_factor = math.log2(2.0 * n / eps)
    # delta > 0 but delta^2 can still underflow; the prescription is then
    # beyond float range and reported as inf rather than an error
    delta_sq = delta * delta
    nabla_sq = nabla * nabla
    m_param = 8.32 * p_min / delta_sq * log_factor if delta_sq > 0 else math.inf
    s_param = 8.32 * p_min / nabla_sq * log_factor if nabla_sq > 0 else math.inf
    t_of_q = 13.0 * (1.0 - q) / (3.0 * q) * m_param
    gamma_hat = (36.06 * (1.0 - q) / (q * delta_sq) * log_factor
                 if delta_sq > 0 else math.inf)
    return DesignPoint(
        q=q, p_minus=p_minus, p_plus=p_plus, q_minus=p_minus, q_plus=q_plus,
        delta=delta, nabla=nabla, p_min=p_min, m=m_param, s=s_param,
        t_of_q=t_of_q, gamma_hat=gamma_hat,
    )


def q_search_window(d: int) -> tuple[float, float]:
    lo = 1.0 / (Q_WINDOW_SCALE * d**3)
    return lo, 1.0 - lo


def _grid_objective(f: TestFunction, qs: np.ndarray, objective: str) -> np.ndarray:
    """Log of the q-search objective on a grid, vectorized over qs.

    Works entirely in log space so grid points whose delta underflows are
    ranked last instead of raising. The constant log2(2n/eps) factor is
    dropped; it does not move the argmin.
    """
    d = f.d
    inc = f.increments()
    log_q = np.log(qs)
    log_1q = np.log1p(-qs)
    j = np.arange(d)
    lcomb = log_comb(d - 1, j)
    out = np.empty(len(qs))
    pos = inc > 0
    log_inc = np.where(pos, np.log(np.where(pos, inc, 1.0)), -np.inf)
    with np.errstate(divide="ignore"):
        log_f_up = np.log(f.values[1:])          # f(j+1)
        log_f_comp = np.log(1.0 - f.values[:-1])  # 1 - f(j)

    def log_dot(lw, log_terms):
        # log sum_j exp(lw[:,j] + log_terms[j]), anchored rowwise
        lt = lw + log_terms
        m = lt.max(axis=1, keepdims=True)
        safe_m = np.where(np.isfinite(m), m, 0.0)
        with np.errstate(divide="ignore"):
            return np.log(np.exp(lt - safe_m).sum(axis=1)) + safe_m[:, 0]

    chunk = max(1, int(4e6) // max(d, 1))
    for lo in range(0, len(qs), chunk):
        hi = min(lo + chunk, len(qs))
        lw = lcomb + np.outer(log_q[lo:hi], j) + np.outer(log_1q[lo:hi], (d - 1) - j)
        log_delta = log_1q[lo:hi] + log_dot(lw, log_inc)
        if objective == "gamma_hat":
            out[lo:hi] = log_1q[lo:hi] - log_q[lo:hi] - 2.0 * log_delta
        elif objective == "t_of_q":
            log_pmin = np.minimum(log_dot(lw, log_f_up), log_dot(lw, log_f_comp))
            out[lo:hi] = log_1q[lo:hi] - log_q[lo:hi] + log_pmin - 2.0 * log_delta
        else:
            raise ParameterOutOfRange(f"unknown objective {objective!r}")
    return out


def optimize_q(
    f: TestFunction,
    n: int,
    eps: float,
    objective: str = "t_of_q",
    resolution: int = 100_000,
) -> tuple[float, DesignPoint]:
    """Grid-minimize the chosen objective over the provable q window.

    One uniform pass of `resolution` points, then one refinement pass of the
    same resolution around the winner. Ties break toward the smaller q.
    """
    if resolution < 100:
        raise ParameterOutOfRange(f"resolution must be >= 100, got {resolution}")
    lo, hi = q_search_window(f.d)
    qs = np.linspace(lo, hi, resolution)
    vals = _grid_objective(f, qs, objective)
    i = int(np.argmin(vals))
    best_q, best_val = qs[i], vals[i]
    step = (hi - lo) / (resolution - 1)
    rlo, rhi = max(lo, best_q - step), min(hi, best_q + step)
    qs2 = np.linspace(rlo, rhi, resolution)
    vals2 = _grid_objective(f, qs2, objective)
    i2 = int(np.argmin(vals2))
    if vals2[i2] < best_val:
        best_q = qs2[i2]
    return float(best_q), design_point(f, float(best_q), n, eps)


@dataclass(frozen=True)
class SensitivityResult:
    """H(f) with the (L, U) level pair achieving it."""

    H: float
    L_star: int
    U_star: int
    beta: float  # min(U-L, sqrt(L+1), sqrt(d-U+1)) at the winner


def sensitivity_H(f: TestFunction) -> SensitivityResult:
    """Exhaustive scan of (1/min{U-L, sqrt(L+1), sqrt(d-U+1)} *
    (U-L)/(f(U)-f(L)))^2 over all 0 <= L < U <= d with f(U) > f(L).

    Ties break toward the smallest L, then the smallest U.
    """
    d = f.d
    v = f.values
    L = np.arange(d + 1)[:, None]
    U = np.arange(d + 1)[None, :]
    gap = v[None, :] - v[:, None]
    valid = (U > L) & (gap > 0)
    if not valid.any():
        raise Degenerate("no level pair with f(U) > f(L)")
    span = (U - L).astype(float)
    beta = np.minimum(np.minimum(span, np.sqrt(L + 1.0)), np.sqrt(d - U + 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        obj = (span / (beta * gap)) ** 2
    obj = np.where(valid, obj, np.inf)
    flat = int(np.argmin(obj))  # row-major: smallest L first, then smallest U
    l_star, u_star = divmod(flat, d + 1)
    return SensitivityResult(
        H=float(obj[l_star, u_star]),
        L_star=int(l_star),
        U_star=int(u_star),
        beta=float(beta[l_star, u_star]),
    )


def sensitivity_bounds(f: TestFunction) -> tuple[float, float]:
    """Universal sandwich for H(f): lower 1/(f(d)-f(0))^2, and for d >= 2 the
    upper 16/(f(d)-f(0))^2 * (log2 log2 d + 2)^2 * d. For d = 1 both sides
    collapse to the exact value."""
    gap2 = (f.fd - f.f0) ** 2
    lower = 1.0 / gap2
    if f.d == 1:
        return lower, lower
    upper = 16.0 / gap2 * (math.log2(math.log2(f.d)) + 2.0) ** 2 * f.d
    return lower, upper


@dataclass(frozen=True)
class ConcentrationResult:
    """h(f) with the minimizing pool size and its moments."""

    h: float
    chi_star: int
    mu_star: float
    sigma2_star: float
    per_chi: np.ndarray | None = None  # rows (chi, mu, sigma2), if requested


def concentration_h(
    f: TestFunction,
    n: int,
    stride: int = 1,
    keep_per_chi: bool = False,
) -> ConcentrationResult:
    """Minimize mu(chi)(1-mu(chi))/sigma^2(chi) over pool sizes chi in 1..n-1.

    mu and sigma^2 are the mean and variance of f under the hypergeometric
    draw of chi items from n with d marked. The pmf is evaluated in log
    space; sigma^2 uses the pairwise form sum_{a<b} w_a w_b (f(a)-f(b))^2 and
    mu(1-mu) the split product (sum w f)(sum w (1-f)), so neither quantity
    loses accuracy to cancellation when mu approaches 0 or 1. Pool sizes
    where f is constant on the support carry no information and are skipped;
    ties break toward the smallest chi. stride > 1 subsamples the chi scan
    (intended for n > 1e5).
    """
    d = f.d
    if n <= d:
        raise ParameterOutOfRange(f"need n > d, got n={n}, d={d}")
    v = f.values
    a = np.arange(d + 1)
    lcd = log_comb(d, a)
    pair_sq = 0.5 * (v[:, None] - v[None, :]) ** 2
    chis = np.arange(1, n, stride)
    best_ratio = math.inf
    best = None
    rows = [] if keep_per_chi else None
    chunk = max(1, int(2e6) // (d + 1))
    for lo in range(0, len(chis), chunk):
        cc = chis[lo : lo + chunk]
        lw = lcd[None, :] + log_comb(n - d, cc[:, None] - a[None, :]) - log_comb(n, cc)[:, None]
        w = np.exp(lw)
        mu = w @ v
        one_minus_mu = w @ (1.0 - v)
        sigma2 = np.sum((w @ pair_sq) * w, axis=1)
        for idx, chi in enumerate(cc):
            s_lo, s_hi = hypergeom_support(n, d, int(chi))
            if v[s_lo] == v[s_hi] or sigma2[idx] <= 0.0:
                if rows is not None:
                    rows.append((int(chi), float(mu[idx]), float(sigma2[idx])))
                continue
            ratio = mu[idx] * one_minus_mu[idx] / sigma2[idx]
            if rows is not None:
                rows.append((int(chi), float(mu[idx]), float(sigma2[idx])))
            if ratio < best_ratio:
                best_ratio = ratio
                best = (int(chi), float(mu[idx]), float(sigma2[idx]))
    if best is None:
        raise Degenerate("sigma^2(chi) vanished for every pool size")
    per_chi = np.array(rows) if rows is not None else None
    return ConcentrationResult(
        h=float(best_ratio), chi_star=best[0], mu_star=best[1],
        sigma2_star=best[2], per_chi=per_chi,
    )


def hypergeom_mean_variance(f: TestFunction, n: int, chi: int) -> tuple[float, float]:
    """(mu(chi), sigma^2(chi)) for a single pool size."""
    d = f.d
    a = np.arange(d + 1)
    lw = log_comb(d, a) + log_comb(n - d, chi - a) - log_comb(n, chi)
    w = np.exp(lw)
    v = f.values
    mu = float(w @ v)
    sigma2 = float(w @ (0.5 * (v[:, None] - v[None, :]) ** 2) @ w)
    return mu, sigma2


@dataclass(frozen=True)
class BoundsReport:
    """Lower/upper test counts and the tightness diagnostics."""

    lower_T: float
    upper_T: int
    q_hat: float          # q minimizing the prescribed test count
    tightness_factor: float
    conjecture_ratio: float
    H: SensitivityResult
    h: ConcentrationResult


def lower_bound_tests(f: TestFunction, n: int, eps: float, h: float | None = None) -> float:
    """Information-theoretic floor: ln 2 * h * ((1-eps) log2 C(n,d) - 1)."""
    if h is None:
        h = concentration_h(f, n).h
    log2_comb = float(log_comb(n, f.d)) * _LOG2E
    return (1.0 / _LOG2E) * h * ((1.0 - eps) * log2_comb - 1.0)


def bounds_report(
    f: TestFunction, n: int, eps: float, resolution: int = 100_000
) -> BoundsReport:
    """Assemble the achievability/converse comparison for (f, n, eps).

    upper_T is the ceiling of the prescribed test count at the q minimizing
    it; tightness_factor is p_min at the surrogate-objective optimum divided
    by mu(chi*)(1 - mu(chi*)); conjecture_ratio is the minimized test count
    with the 8.32 log2(2n/eps) reliability multiplier normalized out,
    divided by h * d * log2 n.
    """
    conc = concentration_h(f, n)
    sens = sensitivity_H(f)
    q_t, point_t = optimize_q(f, n, eps, objective="t_of_q", resolution=resolution)
    q_g, point_g = optimize_q(f, n, eps, objective="gamma_hat", resolution=resolution)
    lower = lower_bound_tests(f, n, eps, h=conc.h)
    upper = int(math.ceil(point_t.t_of_q))
    mu_term = conc.mu_star * (1.0 - conc.mu_star)
    tightness = point_g.p_min / mu_term if mu_term > 0 else math.inf
    log_factor = math.log2(2.0 * n / eps)
    normalized_min_t = point_t.t_of_q / (8.32 * log_factor)
    conjecture = normalized_min_t / (conc.h * f.d * math.log2(n))
    return BoundsReport(
        lower_T=lower, upper_T=upper, q_hat=q_t,
        tightness_factor=tightness, conjecture_ratio=conjecture,
        H=sens, h=conc,
    )
