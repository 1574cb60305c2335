"""Independent verification machinery.

Everything here recomputes a main-path quantity by a different route: exact
rational summation for the sensitivity gap, brute-force enumeration for the
decoder, and Monte Carlo for the conditional positivity probabilities. The
CLI exposes these as `verify` suites; the test suite leans on them heavily.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import codec
from .errors import ParameterOutOfRange
from .functions import TestFunction
from .rng import substream


def _exact_binomial_weight(m: int, j: int, q: Fraction) -> Fraction:
    return math.comb(m, j) * q**j * (1 - q) ** (m - j)


def delta_direct(f: TestFunction, q: float) -> float:
    """Sensitivity gap as P(+,q) - P(-,q) by exact rational summation.

    Deliberately computes the difference of the two positivity probabilities
    (the cancellation-prone form) but in exact arithmetic, so it checks the
    increment-form delta at full relative precision even where the gap is
    hundreds of orders below the probabilities themselves.
    """
    if not 0.0 < q < 1.0:
        raise ParameterOutOfRange(f"q must be in (0,1), got {q}")
    qf = Fraction(q)
    fvals = [Fraction(v) for v in f.values]
    d = f.d
    p_plus = sum(
        _exact_binomial_weight(d - 1, j, qf) * fvals[j + 1] for j in range(d)
    )
    p_minus = sum(
        _exact_binomial_weight(d, j, qf) * fvals[j] for j in range(d + 1)
    )
    return float(p_plus - p_minus)


def positive_prob_exact(f: TestFunction, m: int, zeta: float) -> Fraction:
    """Exact positive-test probability with m defectives each included w.p.
    zeta, under the table f (which must extend to index m)."""
    zf = Fraction(zeta)
    return sum(
        _exact_binomial_weight(m, j, zf) * Fraction(float(f.values[j]))
        for j in range(m + 1)
    )


def _positivity_fractions(f: TestFunction, q: float) -> tuple[Fraction, ...]:
    qf = Fraction(q)
    fvals = [Fraction(v) for v in f.values]
    d = f.d
    w1 = [_exact_binomial_weight(d - 1, j, qf) for j in range(d)]
    w0 = [_exact_binomial_weight(d, j, qf) for j in range(d + 1)]
    p_plus = sum(w * fvals[j + 1] for j, w in enumerate(w1))
    q_plus = sum(w * fvals[j] for j, w in enumerate(w1))
    p_minus = sum(w * fvals[j] for j, w in enumerate(w0))
    return p_minus, p_plus, p_minus, q_plus


def positivity_exact(f: TestFunction, q: float) -> tuple[float, float, float, float]:
    """(p_minus, p_plus, q_minus, q_plus) by exact rational summation."""
    return tuple(float(v) for v in _positivity_fractions(f, q))


def hypergeom_exact_moments(n: int, d: int, chi: int, fvals) -> tuple[Fraction, Fraction, Fraction]:
    """(pmf total, mean of f, variance of f) as exact rationals, n <= 60."""
    if n > 60:
        raise ParameterOutOfRange("exact hypergeometric checks are gated to n <= 60")
    denom = math.comb(n, chi)
    fr = [Fraction(v) for v in fvals]

    def weight(a):
        if chi - a < 0 or chi - a > n - d:
            return Fraction(0)
        return Fraction(math.comb(d, a) * math.comb(n - d, chi - a), denom)

    total = sum(weight(a) for a in range(d + 1))
    mean = sum(weight(a) * fr[a] for a in range(d + 1))
    var = sum(weight(a) * (fr[a] - mean) ** 2 for a in range(d + 1))
    return total, mean, var


@dataclass(frozen=True)
class MicroInstance:
    """Instance small enough to enumerate every outcome vector exactly."""

    matrix: codec.TestMatrix
    f: TestFunction

    def __post_init__(self):
        if self.matrix.n > 8 or self.f.d > 2 or self.matrix.T > 6:
            raise ParameterOutOfRange("micro instance limits: n <= 8, d <= 2, T <= 6")


def reference_decode(matrix: codec.TestMatrix, bits: np.ndarray, f: TestFunction) -> set[int]:
    """Plain-Python re-implementation of the decoding rules.

    Loops item by item and compares exact rational fractions against exact
    rational thresholds; shares no code with the vectorized decoder.
    """
    p_minus, p_plus, q_minus, q_plus = _positivity_fractions(f, matrix.q)
    declared = set()
    total_pos = int(np.count_nonzero(bits))
    for i in range(matrix.n):
        col = matrix.rows[:, i]
        t_i = int(np.count_nonzero(col))
        t_pos = int(np.count_nonzero(col & bits))
        if matrix.q <= 0.5:
            if t_i == 0:
                continue
            if Fraction(t_pos, t_i) > (p_minus + p_plus) / 2:
                declared.add(i)
        else:
            l_i = matrix.T - t_i
            if l_i == 0:
                continue
            if Fraction(total_pos - t_pos, l_i) <= (q_minus + q_plus) / 2:
                declared.add(i)
    return declared


def exhaustive_error_probability(inst: MicroInstance, eps: float | None = None) -> float:
    """Exact decoder error probability of the instance.

    Enumerates all C(n, d) defective sets (uniform) and all 2^T outcome
    vectors, weighting each vector by prod f(Z_i)^y_i (1-f(Z_i))^(1-y_i).
    """
    matrix, f = inst.matrix, inst.f
    n, T, d = matrix.n, matrix.T, f.d
    sets = list(itertools.combinations(range(n), d))
    err = 0.0
    for defectives in sets:
        z = codec.defective_counts(matrix, list(defectives))
        pz = f.values[z]
        truth = set(defectives)
        for bits_tuple in itertools.product((0, 1), repeat=T):
            bits = np.array(bits_tuple, dtype=bool)
            weight = float(np.prod(np.where(bits, pz, 1.0 - pz)))
            if weight == 0.0:
                continue
            decoded = reference_decode(matrix, bits, f)
            if decoded != truth:
                err += weight / len(sets)
    return err


CONDITIONS = (
    "item_in_defective",      # matches p_plus
    "item_in_nondefective",   # matches p_minus
    "item_out_defective",     # matches q_plus
    "item_out_nondefective",  # matches q_minus
)


def empirical_positivity(
    f: TestFunction, q: float, condition: str, samples: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of one conditional positivity probability.

    Simulates the membership of the relevant defectives directly: with the
    tracked item in the test, the defective count is 1 + Binomial(d-1, q)
    if the item is defective and Binomial(d, q) otherwise; with the item out
    it is Binomial(d-1, q) or Binomial(d, q). Returns (rate, stderr).
    """
    if samples < 10_000:
        raise ParameterOutOfRange("samples must be >= 1e4")
    if condition not in CONDITIONS:
        raise ParameterOutOfRange(f"unknown condition {condition!r}")
    gen = substream(seed)
    if condition == "item_in_defective":
        z = 1 + gen.binomial(f.d - 1, q, size=samples)
    elif condition == "item_out_defective":
        z = gen.binomial(f.d - 1, q, size=samples)
    else:
        z = gen.binomial(f.d, q, size=samples)
    hits = gen.random(samples) < f.values[z]
    rate = float(np.count_nonzero(hits)) / samples
    stderr = math.sqrt(max(rate * (1.0 - rate), 1.0 / samples) / samples)
    return rate, stderr
