"""Monte Carlo experiment harness: single points, waterfalls, heatmaps.

Every trial draws its own (matrix, defective set, outcomes) streams from
(master_seed, trial_index, stream), so results are byte-identical across
runs and thread counts. Success is exact recovery of the defective set.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import codec
from .design import optimize_q, positivity_probabilities
from .errors import ParameterOutOfRange
from .functions import FamilyKind, TestFunction, TestFunctionFamily
from .rng import STREAM_DEFECTIVES, STREAM_MATRIX, STREAM_OUTCOMES, derive_seed, substream

SUCCESS_TARGET = 0.99  # reconstruction probability defining the waterfall crossing


@dataclass(frozen=True)
class TSpec:
    """Test-count specification.

    mode "explicit": values are absolute test counts.
    mode "dlog":     values are multiples of d * log2(n).
    mode "d2log":    values are multiples of d^2 * log2(n).
    mode "range":    values is (start, stop, step) in absolute tests.
    """

    mode: str
    values: tuple

    def resolve(self, n: int, d: int) -> list[tuple[float, int]]:
        """List of (sweep_value, T)."""
        if self.mode == "explicit":
            return [(float(v), int(v)) for v in self.values]
        if self.mode == "dlog":
            base = d * math.log2(n)
            return [(float(v), math.ceil(v * base)) for v in self.values]
        if self.mode == "d2log":
            base = d * d * math.log2(n)
            return [(float(v), math.ceil(v * base)) for v in self.values]
        if self.mode == "range":
            start, stop, step = self.values
            ts = range(int(start), int(stop) + 1, int(step))
            return [(float(t), int(t)) for t in ts]
        raise ParameterOutOfRange(f"unknown T mode {self.mode!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    family: TestFunctionFamily
    n: int
    d: int
    t_spec: TSpec
    trials: int = 100
    eps: float = 0.01
    q: float | str = "auto"  # "auto", "paper", or an explicit probability
    master_seed: int = 0
    threads: int = 1
    d_values: tuple[int, ...] = ()   # heatmap sweep over d
    n_values: tuple[int, ...] = ()   # heatmap sweep over n
    q_resolution: int = 20_000
    fast_stats: bool = False  # sufficient-statistic trials (distribution-identical)

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterOutOfRange("trials must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    sweep_value: float
    T: int
    trials: int
    successes: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def resolve_q(config: ExperimentConfig, n: int, d: int) -> float:
    """Participation probability for one experiment column."""
    f = config.family.instantiate(d)
    if isinstance(config.q, (int, float)):
        return float(config.q)
    mode = "paper" if config.q == "paper-heuristic" else config.q
    if mode == "paper":
        if config.family.kind is FamilyKind.THRESHOLD:
            return config.family.params[0] / d
        if config.family.kind is FamilyKind.LINEAR:
            return 0.5
        # no published heuristic for the other families; fall through to auto
    if mode in ("auto", "paper"):
        q_hat, _ = optimize_q(f, n, config.eps, objective="t_of_q",
                              resolution=config.q_resolution)
        return q_hat
    raise ParameterOutOfRange(f"bad q specification {config.q!r}")


def _draw_defectives(n: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Uniform d-subset of range(n) by partial Fisher-Yates."""
    pool = np.arange(n)
    for i in range(d):
        j = i + int(gen.integers(0, n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:d])


def _trial_success(f: TestFunction, n: int, T: int, q: float,
                   master_seed: int, trial: int) -> bool:
    """One full-protocol trial: matrix, planted defectives, outcomes, decode."""
    defectives = _draw_defectives(
        n, f.d, substream(master_seed, trial, STREAM_DEFECTIVES))
    if T == 0:
        return False  # no tests: decoder has no information, declares nothing
    matrix = codec.generate_matrix(
        n, T, q, seed=derive_seed(master_seed, trial, STREAM_MATRIX))
    outcomes = codec.simulate_outcomes(
        matrix, defectives, f, seed=derive_seed(master_seed, trial, STREAM_OUTCOMES))
    result = codec.decode(matrix, outcomes, f)
    est = result.estimated_defectives
    return est.size == f.d and bool(np.array_equal(est, defectives))


def _trial_success_fast(f: TestFunction, n: int, T: int, q: float,
                        thresholds: tuple[float, float],
                        master_seed: int, trial: int) -> bool:
    """Sufficient-statistic trial, distribution-identical to the full path.

    Only the defective columns shape the outcome vector; conditioned on the
    number of positive tests, each non-defective item's (tests-in,
    positives-in) pair is an independent (Binomial(T+, q), Binomial(T-, q))
    draw. Success only needs the per-item comparisons, so the non-defective
    block is sampled directly instead of materialized.
    """
    if T == 0:
        return False
    mid1, mid2 = thresholds
    gen_m = substream(master_seed, trial, STREAM_MATRIX)
    defect_cols = gen_m.random((T, f.d)) < q
    z = defect_cols.sum(axis=1)
    y = substream(master_seed, trial, STREAM_OUTCOMES).random(T) < f.values[z]
    t_pos_total = int(np.count_nonzero(y))
    gen_nd = substream(master_seed, trial, STREAM_DEFECTIVES)
    in_pos = gen_nd.binomial(t_pos_total, q, size=n - f.d)
    in_neg = gen_nd.binomial(T - t_pos_total, q, size=n - f.d)
    tests_in_d = defect_cols.sum(axis=0)
    pos_in_d = defect_cols[y].sum(axis=0)
    if q <= 0.5:
        ok_def = (tests_in_d > 0) & (pos_in_d > mid1 * tests_in_d)
        ok_nondef = ~((in_pos + in_neg > 0) & (in_pos > mid1 * (in_pos + in_neg)))
    else:
        l_d = T - tests_in_d
        lp_d = t_pos_total - pos_in_d
        ok_def = (l_d > 0) & (lp_d <= mid2 * l_d)
        l_nd = T - in_pos - in_neg
        lp_nd = t_pos_total - in_pos
        ok_nondef = ~((l_nd > 0) & (lp_nd <= mid2 * l_nd))
    return bool(ok_def.all() and ok_nondef.all())


def _run_trials(config: ExperimentConfig, n: int, d: int, T: int, q: float) -> int:
    f = config.family.instantiate(d)
    if config.fast_stats:
        p_minus, p_plus, q_minus, q_plus = positivity_probabilities(f, q)
        thresholds = ((p_minus + p_plus) / 2.0, (q_minus + q_plus) / 2.0)

        def one(t: int) -> bool:
            return _trial_success_fast(f, n, T, q, thresholds, config.master_seed, t)
    else:
        def one(t: int) -> bool:
            return _trial_success(f, n, T, q, config.master_seed, t)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            results = list(ex.map(one, range(config.trials)))
    else:
        results = [one(t) for t in range(config.trials)]
    return int(sum(results))


def run_point(config: ExperimentConfig) -> TrialRecord:
    """Estimate the success probability at a single (n, d, T)."""
    resolved = config.t_spec.resolve(config.n, config.d)
    if len(resolved) != 1:
        raise ParameterOutOfRange("run_point needs exactly one T")
    sweep_value, T = resolved[0]
    q = resolve_q(config, config.n, config.d)
    successes = _run_trials(config, config.n, config.d, T, q)
    return TrialRecord(sweep_value=sweep_value, T=T,
                       trials=config.trials, successes=successes)


def waterfall(config: ExperimentConfig) -> list[TrialRecord]:
    """Success-rate curve over the configured T grid at fixed (n, d)."""
    q = resolve_q(config, config.n, config.d)
    records = []
    for sweep_value, T in config.t_spec.resolve(config.n, config.d):
        successes = _run_trials(config, config.n, config.d, T, q)
        records.append(TrialRecord(sweep_value=sweep_value, T=T,
                                   trials=config.trials, successes=successes))
    return records


@dataclass(frozen=True)
class HeatmapColumn:
    column_value: int  # the swept d or n
    records: tuple[TrialRecord, ...]
    first_reaching_target: int | None  # smallest T with rate >= SUCCESS_TARGET


def heatmap(config: ExperimentConfig) -> list[HeatmapColumn]:
    """Sweep d (or n) and report each column's curve plus its red-dot T."""
    if bool(config.d_values) == bool(config.n_values):
        raise ParameterOutOfRange("heatmap needs exactly one of d_values or n_values")
    columns = []
    sweep_d = bool(config.d_values)
    for value in (config.d_values if sweep_d else config.n_values):
        n = config.n if sweep_d else int(value)
        d = int(value) if sweep_d else config.d
        q = resolve_q(config, n, d)
        records = []
        first = None
        for sweep_value, T in config.t_spec.resolve(n, d):
            successes = _run_trials(config, n, d, T, q)
            rec = TrialRecord(sweep_value=sweep_value, T=T,
                              trials=config.trials, successes=successes)
            records.append(rec)
            if first is None and rec.success_rate >= SUCCESS_TARGET:
                first = T
        columns.append(HeatmapColumn(column_value=int(value),
                                     records=tuple(records),
                                     first_reaching_target=first))
    return columns


def first_crossing(records: list[TrialRecord]) -> TrialRecord | None:
    """First record (in sweep order) whose rate reaches the success target."""
    for rec in records:
        if rec.success_rate >= SUCCESS_TARGET:
            return rec
    return None


CSV_HEADER = "sweep_value,T,trials,successes,success_rate"


def records_to_csv(records) -> str:
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(
            f"{rec.sweep_value:.6f},{rec.T},{rec.trials},{rec.successes},"
            f"{rec.success_rate:.6f}"
        )
    return "\n".join(lines) + "\n"


def heatmap_to_csv(columns: list[HeatmapColumn], sweep_name: str) -> str:
    lines = [f"{sweep_name},{CSV_HEADER}"]
    for col in columns:
        for rec in col.records:
            lines.append(
                f"{col.column_value},{rec.sweep_value:.6f},{rec.T},{rec.trials},"
                f"{rec.successes},{rec.success_rate:.6f}"
            )
    return "\n".join(lines) + "\n"


def red_dots_to_csv(columns: list[HeatmapColumn], sweep_name: str) -> str:
    lines = [f"{sweep_name},first_T_reaching_{SUCCESS_TARGET}"]
    for col in columns:
        t = col.first_reaching_target
        lines.append(f"{col.column_value},{'' if t is None else t}")
    return "\n".join(lines) + "\n"
