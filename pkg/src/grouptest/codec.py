"""Bernoulli test matrices, stochastic outcomes, and the two decoding rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import positivity_probabilities
from .errors import DefectiveCountMismatch, ParameterOutOfRange
from .functions import TestFunction
from .rng import substream

# Rows are generated in fixed-size blocks, each from its own counter-based
# stream keyed by (seed, block), so entry (j, i) depends only on (seed, j, i)
# and block-parallel regeneration is bit-identical regardless of thread count.
ROWS_PER_BLOCK = 256


@dataclass(frozen=True)
class TestMatrix:
    """T x n binary design with i.i.d. Bernoulli(q) entries."""

    T: int
    n: int
    q: float
    seed: int
    rows: np.ndarray  # bool, shape (T, n)


@dataclass(frozen=True)
class Outcomes:
    bits: np.ndarray  # bool, length T
    seed: int


@dataclass(frozen=True)
class DecodeResult:
    estimated_defectives: np.ndarray  # sorted item indices
    rule_used: str  # "rule1" or "rule2"
    tests_per_item: np.ndarray    # tests in (rule1) / out of (rule2), per item
    positives_per_item: np.ndarray
    threshold: float
    undefined_items: int  # items with zero tests on the rule's side


def generate_matrix(n: int, T: int, q: float, seed: int) -> TestMatrix:
    """Deterministic Bernoulli(q) matrix for (T, n, q, seed)."""
    if T < 1 or n < 1:
        raise ParameterOutOfRange(f"need T >= 1 and n >= 1, got T={T}, n={n}")
    if not 0.0 < q < 1.0:
        raise ParameterOutOfRange(f"q must be in (0,1), got {q}")
    rows = np.empty((T, n), dtype=bool)
    for block in range((T + ROWS_PER_BLOCK - 1) // ROWS_PER_BLOCK):
        r0 = block * ROWS_PER_BLOCK
        r1 = min(r0 + ROWS_PER_BLOCK, T)
        gen = substream(seed, block)
        rows[r0:r1] = gen.random((r1 - r0, n)) < q
    rows.setflags(write=False)
    return TestMatrix(T=T, n=n, q=q, seed=seed, rows=rows)


def defective_counts(matrix: TestMatrix, defectives) -> np.ndarray:
    """Number of defective items in each test."""
    idx = np.asarray(defectives, dtype=int)
    return matrix.rows[:, idx].sum(axis=1)


def simulate_outcomes(
    matrix: TestMatrix, defectives, f: TestFunction, seed: int
) -> Outcomes:
    """Draw outcome i ~ Bernoulli(f(Z_i)) with Z_i the defective count in test i."""
    idx = np.asarray(defectives, dtype=int)
    if idx.size != f.d:
        raise DefectiveCountMismatch(
            f"got {idx.size} defectives for a test function with d={f.d}"
        )
    if idx.size and (idx.min() < 0 or idx.max() >= matrix.n):
        raise ParameterOutOfRange("defective index out of range")
    z = defective_counts(matrix, idx)
    u = substream(seed).random(matrix.T)
    bits = u < f.values[z]
    bits.setflags(write=False)
    return Outcomes(bits=bits, seed=seed)


def decode(
    matrix: TestMatrix,
    outcomes: Outcomes,
    f: TestFunction,
    eps: float | None = None,
) -> DecodeResult:
    """Classify every item by its positive fraction against the rule threshold.

    Rule 1 (q <= 1/2) uses the tests an item participates in and declares it
    defective on a strictly greater fraction than (p_minus + p_plus)/2.
    Rule 2 (q > 1/2) uses the tests the item is excluded from and declares it
    defective on a fraction <= (q_minus + q_plus)/2. Items with zero tests on
    the relevant side are classified non-defective and counted. eps is
    accepted for interface compatibility; the thresholds depend only on
    (f, q).
    """
    if outcomes.bits.shape != (matrix.T,):
        raise ParameterOutOfRange(
            f"outcomes length {outcomes.bits.shape} does not match T={matrix.T}"
        )
    p_minus, p_plus, q_minus, q_plus = positivity_probabilities(f, matrix.q)
    y = outcomes.bits
    tests_in = matrix.rows.sum(axis=0)
    positives_in = matrix.rows[y].sum(axis=0)
    if matrix.q <= 0.5:
        rule = "rule1"
        threshold = (p_minus + p_plus) / 2.0
        counts = tests_in
        positives = positives_in
        defined = counts > 0
        frac = np.where(defined, positives / np.maximum(counts, 1), 0.0)
        declared = defined & (frac > threshold)
    else:
        rule = "rule2"
        threshold = (q_minus + q_plus) / 2.0
        counts = matrix.T - tests_in
        positives = int(y.sum()) - positives_in
        defined = counts > 0
        frac = np.where(defined, positives / np.maximum(counts, 1), np.inf)
        declared = defined & (frac <= threshold)
    estimated = np.flatnonzero(declared)
    return DecodeResult(
        estimated_defectives=estimated,
        rule_used=rule,
        tests_per_item=counts,
        positives_per_item=positives,
        threshold=float(threshold),
        undefined_items=int(np.count_nonzero(~defined)),
    )


def save_matrix(matrix: TestMatrix, path) -> None:
    """Header `T n q seed`, then T lines of 0/1 characters."""
    with open(path, "w") as fh:
        fh.write(f"{matrix.T} {matrix.n} {matrix.q!r} {matrix.seed}\n")
        for row in matrix.rows:
            fh.write("".join("1" if b else "0" for b in row))
            fh.write("\n")


def load_matrix(path) -> TestMatrix:
    with open(path) as fh:
        header = fh.readline().split()
        T, n, q, seed = int(header[0]), int(header[1]), float(header[2]), int(header[3])
        rows = np.empty((T, n), dtype=bool)
        for i in range(T):
            line = fh.readline().strip()
            if len(line) != n:
                raise ParameterOutOfRange(f"row {i} has length {len(line)}, expected {n}")
            rows[i] = np.frombuffer(line.encode(), dtype=np.uint8) == ord("1")
    rows.setflags(write=False)
    return TestMatrix(T=T, n=n, q=q, seed=seed, rows=rows)


def save_outcomes(outcomes: Outcomes, path) -> None:
    """One 0/1 per line."""
    with open(path, "w") as fh:
        for b in outcomes.bits:
            fh.write("1\n" if b else "0\n")


def load_outcomes(path, seed: int = 0) -> Outcomes:
    with open(path) as fh:
        bits = np.array([line.strip() == "1" for line in fh if line.strip()], dtype=bool)
    bits.setflags(write=False)
    return Outcomes(bits=bits, seed=seed)
