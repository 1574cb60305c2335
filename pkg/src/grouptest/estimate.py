"""Adaptive exact estimation of the defective count.

A low-or-meet subroutine decides d <= d_hat - 1 versus d >= d_hat from the
positive fraction of fresh Bernoulli(zeta) pools; doubling then binary search
pin down d exactly in at most 2 log2(2d) adaptive stages.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .design import q_search_window, _grid_objective
from .errors import Degenerate, ParameterOutOfRange
from .functions import TestFunction, TestFunctionFamily
from .numerics import log_comb
from .rng import substream


@dataclass(frozen=True)
class LomParams:
    """Sized test plan for one low-or-meet decision at candidate count d_hat."""

    d_hat: int
    zeta: float
    eps_sub: float
    t_tests: int
    threshold: float  # positive-fraction cutoff separating the hypotheses
    p_at: float       # positive-test probability if d = d_hat
    delta: float      # sensitivity gap at (d_hat, zeta)


class PoolTester:
    """Test oracle the estimator drives.

    test_random_pool(zeta) runs one test against a fresh pool in which every
    item participates independently with probability zeta, returning the
    binary outcome. draw(zeta, count) is the batch equivalent of count
    independent such calls. Outcomes across calls are independent given the
    hidden defective set.
    """

    def test_random_pool(self, zeta: float) -> int:
        raise NotImplementedError

    def draw(self, zeta: float, count: int) -> np.ndarray:
        return np.array([self.test_random_pool(zeta) for _ in range(count)], dtype=bool)


class SimulationPoolTester(PoolTester):
    """Simulates pools against a hidden defective set and true test function.

    Only the defective membership count matters for the outcome, so each test
    draws Z ~ Binomial(d, zeta) and then Bernoulli(f(Z)).
    """

    def __init__(self, n: int, defectives, f: TestFunction, seed: int):
        idx = np.unique(np.asarray(defectives, dtype=int))
        if idx.size != f.d:
            raise ParameterOutOfRange(
                f"{idx.size} distinct defectives for a test function with d={f.d}"
            )
        if idx.size == 0:
            raise ParameterOutOfRange("hidden defective set must be non-empty")
        if idx.min() < 0 or idx.max() >= n:
            raise ParameterOutOfRange("defective index out of range")
        self.n = n
        self.d = f.d
        self.f = f
        self._calls = 0
        self._seed = seed

    def test_random_pool(self, zeta: float) -> int:
        return int(self.draw(zeta, 1)[0])

    def draw(self, zeta: float, count: int) -> np.ndarray:
        gen = substream(self._seed, self._calls)
        self._calls += 1
        z = gen.binomial(self.d, zeta, size=count)
        return gen.random(count) < self.f.values[z]


def lom_statistics(f: TestFunction, zeta: float) -> tuple[float, float]:
    """(P(d_hat, zeta), Delta(d_hat, zeta)) for f instantiated at d_hat.

    P is the positive-test probability when the true count equals d_hat;
    Delta is the increment-form sensitivity gap, and P(d_hat) - P(d_hat - 1)
    = zeta/(1-zeta) * Delta.
    """
    d = f.d
    j = np.arange(d + 1)
    lw = log_comb(d, j) + j * math.log(zeta) + (d - j) * math.log1p(-zeta)
    m = lw.max()
    w = np.exp(lw - m) * math.exp(m)
    p_at = float(w @ f.values)
    j1 = np.arange(d)
    lw1 = log_comb(d - 1, j1) + j1 * math.log(zeta) + (d - j1) * math.log1p(-zeta)
    m1 = lw1.max()
    w1 = np.exp(lw1 - m1) * math.exp(m1)
    delta = float(w1 @ f.increments())
    return p_at, delta


def lom_params(
    family: TestFunctionFamily,
    d_hat: int,
    eps_sub: float,
    resolution: int = 100_000,
) -> LomParams:
    """Optimize zeta and size the test plan for one decision at d_hat.

    zeta minimizes (1-zeta)/(zeta * Delta^2) over the same windowed grid the
    q search uses; the plan takes ceil(8.32 ((1-zeta)/(zeta Delta))^2
    log2(1/eps_sub)) tests against the cutoff P - zeta/(2(1-zeta)) * Delta.
    Results are memoized; the computation is deterministic.
    """
    return _lom_params_cached(family, d_hat, eps_sub, resolution)


@functools.lru_cache(maxsize=512)
def _lom_params_cached(
    family: TestFunctionFamily, d_hat: int, eps_sub: float, resolution: int
) -> LomParams:
    if d_hat < 2:
        raise ParameterOutOfRange(f"d_hat must be >= 2, got {d_hat}")
    if not 0.0 < eps_sub < 1.0:
        raise ParameterOutOfRange(f"eps_sub must be in (0,1), got {eps_sub}")
    f = family.instantiate(d_hat)
    lo, hi = q_search_window(d_hat)
    zs = np.linspace(lo, hi, resolution)
    vals = _grid_objective(f, zs, "gamma_hat")
    i = int(np.argmin(vals))
    step = (hi - lo) / (resolution - 1)
    zs2 = np.linspace(max(lo, zs[i] - step), min(hi, zs[i] + step), resolution)
    vals2 = _grid_objective(f, zs2, "gamma_hat")
    i2 = int(np.argmin(vals2))
    zeta = float(zs2[i2]) if vals2[i2] < vals[i] else float(zs[i])
    p_at, delta = lom_statistics(f, zeta)
    if delta <= 0.0:
        raise Degenerate(f"f constant on 0..{d_hat}; cannot separate the hypotheses")
    t_tests = int(math.ceil(
        8.32 * ((1.0 - zeta) / (zeta * delta)) ** 2 * math.log2(1.0 / eps_sub)
    ))
    threshold = p_at - zeta / (2.0 * (1.0 - zeta)) * delta
    return LomParams(
        d_hat=d_hat, zeta=zeta, eps_sub=eps_sub, t_tests=t_tests,
        threshold=threshold, p_at=p_at, delta=delta,
    )


BELOW = "below"            # concluded d <= d_hat - 1
AT_OR_ABOVE = "at_or_above"  # concluded d >= d_hat


def lom_decide(tester: PoolTester, params: LomParams) -> str:
    """Run the sized plan and compare the positive fraction to the cutoff.

    Tester failures (TesterFailure) propagate to the caller.
    """
    outcomes = tester.draw(params.zeta, params.t_tests)
    positive = int(np.count_nonzero(outcomes))
    frac = positive / params.t_tests
    return BELOW if frac <= params.threshold else AT_OR_ABOVE


@dataclass(frozen=True)
class EstimateResult:
    d_estimate: int
    stages: int
    tests_used: int
    probes: tuple[tuple[int, str], ...]  # (d_hat, verdict) per stage


def estimate_d(
    tester: PoolTester,
    family: TestFunctionFamily,
    n: int,
    eps: float,
    resolution: int = 20_000,
) -> EstimateResult:
    """Exact defective count via doubling then binary search.

    Each stage spends eps/(2 log2 n + 2) of the error budget. The hidden
    count must be >= 1; the doubling phase probes d_hat = 2, 4, 8, ... until
    a stage concludes "below", and the binary search narrows the bracket to
    width one. At most 2 log2(2d) stages are used in total.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterOutOfRange(f"eps must be in (0,1), got {eps}")
    eps_sub = eps / (2.0 * math.log2(n) + 2.0)
    probes: list[tuple[int, str]] = []
    tests_used = 0

    def probe(d_hat: int) -> str:
        nonlocal tests_used
        params = lom_params(family, d_hat, eps_sub, resolution=resolution)
        verdict = lom_decide(tester, params)
        probes.append((d_hat, verdict))
        tests_used += params.t_tests
        return verdict

    d_up = 2
    while probe(d_up) == AT_OR_ABOVE:
        d_up *= 2
    d_low = d_up // 2
    while d_up - d_low >= 2:
        d_mid = (d_low + d_up) // 2
        if probe(d_mid) == BELOW:
            d_up = d_mid
        else:
            d_low = d_mid
    return EstimateResult(
        d_estimate=d_low, stages=len(probes), tests_used=tests_used,
        probes=tuple(probes),
    )
