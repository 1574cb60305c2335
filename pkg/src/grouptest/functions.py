"""Monotone stochastic test functions.

A test function maps the number of defective items in a pool to the
probability of a positive outcome. It is stored as an explicit table of d+1
values; the built-in families can be re-instantiated at any defective count,
which the adaptive count estimator relies on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import Degenerate, NonMonotone, ParameterOutOfRange

# Values outside [0,1] by no more than this are clamped on ingestion.
CLAMP_TOL = 1e-12


class NoiseClass(enum.Enum):
    NOISY = "noisy"
    ONE_SIDED_NOISELESS = "one_sided_noiseless"
    NOISELESS = "noiseless"
    # Asymptotic class (f(0) -> 0 or f(d) -> 1 as d grows). Not decidable from
    # a single finite-d table, so classify() never returns it; kept for
    # callers that track whole families.
    NEAR_NOISELESS = "near_noiseless"


@dataclass(frozen=True)
class TestFunction:
    """Tabulated monotone f: {0..d} -> [0,1] with f(0) < f(d).

    The table is immutable after construction and safe to share across
    threads.
    """

    d: int
    values: np.ndarray

    def __post_init__(self):
        if self.d < 1:
            raise ParameterOutOfRange(f"d must be >= 1, got {self.d}")
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.d + 1,):
            raise ParameterOutOfRange(
                f"expected {self.d + 1} values for d={self.d}, got shape {v.shape}"
            )
        if np.any(v < -CLAMP_TOL) or np.any(v > 1.0 + CLAMP_TOL):
            raise ParameterOutOfRange("table values outside [0,1]")
        v = np.clip(v, 0.0, 1.0)
        if np.any(np.diff(v) < 0):
            raise NonMonotone("table values must be non-decreasing")
        if v[0] >= v[-1]:
            raise Degenerate("f(0) must be strictly less than f(d)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, x: int) -> float:
        return float(self.values[x])

    @property
    def f0(self) -> float:
        return float(self.values[0])

    @property
    def fd(self) -> float:
        return float(self.values[-1])

    def increments(self) -> np.ndarray:
        """f(j+1) - f(j) for j = 0..d-1."""
        return np.diff(self.values)


class FamilyKind(enum.Enum):
    CLASSICAL = "classical"
    THRESHOLD = "threshold"
    LINEAR = "linear"
    LINEAR_GAP = "linear_gap"
    NOISY = "noisy"
    PARTIAL_LINEAR = "partial_linear"
    SIGMOID = "sigmoid"
    TABLE = "table"


@dataclass(frozen=True)
class TestFunctionFamily:
    """A test-function family, instantiable at any valid defective count."""

    kind: FamilyKind
    params: tuple = ()
    table: tuple[float, ...] | None = None

    def instantiate(self, d: int) -> TestFunction:
        if d < 1:
            raise ParameterOutOfRange(f"d must be >= 1, got {d}")
        x = np.arange(d + 1)
        k = self.kind
        if k is FamilyKind.CLASSICAL:
            v = (x >= 1).astype(float)
        elif k is FamilyKind.THRESHOLD:
            (ell,) = self.params
            if not 0 <= ell <= d - 1:
                raise ParameterOutOfRange(f"threshold level {ell} not in 0..{d - 1}")
            v = (x > ell).astype(float)
        elif k is FamilyKind.LINEAR:
            v = x / d
        elif k is FamilyKind.LINEAR_GAP:
            ell, u = self.params
            if not 0 < ell < u < d:
                raise ParameterOutOfRange(f"linear-gap needs 0 < {ell} < {u} < {d}")
            v = np.clip((x - ell) / (u - ell), 0.0, 1.0)
        elif k is FamilyKind.NOISY:
            a, b = self.params
            if not 0 < a < b < 1:
                raise ParameterOutOfRange(f"noisy needs 0 < a < b < 1, got ({a}, {b})")
            v = np.where(x == 0, a, b)
        elif k is FamilyKind.PARTIAL_LINEAR:
            (w,) = self.params
            if not 0.0 <= w <= 1.0:
                raise ParameterOutOfRange(f"partial-linear exponent {w} not in [0,1]")
            dw = d**w
            v = np.where(x <= dw, x / dw, 1.0)
        elif k is FamilyKind.SIGMOID:
            v = expit(x / 2.0 - d / 4.0)
        elif k is FamilyKind.TABLE:
            if self.table is None or len(self.table) != d + 1:
                raise ParameterOutOfRange(
                    f"table family has {0 if self.table is None else len(self.table)} "
                    f"values, needs {d + 1}"
                )
            v = np.array(self.table, dtype=float)
        else:  # pragma: no cover
            raise ParameterOutOfRange(f"unknown family kind {k}")
        return TestFunction(d=d, values=v)

    def describe(self) -> str:
        if self.kind is FamilyKind.TABLE:
            return "table"
        if self.params:
            return f"{self.kind.value}({', '.join(repr(p) for p in self.params)})"
        return self.kind.value


def classical() -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.CLASSICAL)


def threshold(ell: int) -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.THRESHOLD, (int(ell),))


def linear() -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.LINEAR)


def linear_gap(ell: int, u: int) -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.LINEAR_GAP, (int(ell), int(u)))


def noisy(a: float, b: float) -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.NOISY, (float(a), float(b)))


def partial_linear(w: float) -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.PARTIAL_LINEAR, (float(w),))


def sigmoid() -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.SIGMOID)


def table(values) -> TestFunctionFamily:
    return TestFunctionFamily(FamilyKind.TABLE, table=tuple(float(v) for v in values))


def build(family: TestFunctionFamily, d: int) -> TestFunction:
    """Instantiate a family at defective count d."""
    return family.instantiate(d)


def classify(f: TestFunction) -> NoiseClass:
    """Exact finite-d noise class of f, from (f(0), f(d)) alone."""
    zero_exact = f.f0 == 0.0
    one_exact = f.fd == 1.0
    if zero_exact and one_exact:
        return NoiseClass.NOISELESS
    if zero_exact or one_exact:
        return NoiseClass.ONE_SIDED_NOISELESS
    return NoiseClass.NOISY


def load_table(path) -> list[float]:
    """Read a table file: one probability per line, d+1 lines."""
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            values.append(float(line))
    if len(values) < 2:
        raise ParameterOutOfRange(f"table file {path} needs at least 2 values")
    return values


def _parse_number(text: str) -> float:
    # accepts plain floats and simple fractions like 2/3
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def parse_family_spec(spec: str) -> TestFunctionFamily:
    """Parse the CLI family syntax.

    classical | threshold:<l> | linear | linear-gap:<l>,<u> | noisy:<a>,<b>
    | partial-linear:<w> | sigmoid | table:<path>
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower().replace("_", "-")
    if name == "classical":
        return classical()
    if name == "threshold":
        return threshold(int(arg))
    if name == "linear":
        return linear()
    if name == "linear-gap":
        ell, u = arg.split(",")
        return linear_gap(int(ell), int(u))
    if name == "noisy":
        a, b = arg.split(",")
        return noisy(_parse_number(a), _parse_number(b))
    if name == "partial-linear":
        return partial_linear(_parse_number(arg))
    if name == "sigmoid":
        return sigmoid()
    if name == "table":
        return table(load_table(arg))
    raise ParameterOutOfRange(f"unknown test-function spec {spec!r}")
