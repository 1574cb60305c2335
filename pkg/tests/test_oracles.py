import math

import numpy as np
import pytest

import grouptest as gt
from grouptest import codec, oracles
from grouptest.design import positivity_probabilities
from grouptest.errors import ParameterOutOfRange
from grouptest.rng import substream


def random_monotone(gen, d):
    v = np.sort(gen.random(d + 1))
    if v[0] == v[-1]:
        v[-1] = min(1.0, v[0] + 0.5)
    return gt.TestFunction(d=d, values=v)


# ------------------------------------------------------------- delta_direct

def test_delta_direct_classical():
    f = gt.build(gt.classical(), 8)
    for q in (0.1, 0.5, 0.9):
        assert oracles.delta_direct(f, q) == pytest.approx((1 - q) ** 8, rel=1e-12)


def test_delta_direct_linear_collapse():
    f = gt.build(gt.linear(), 15)
    for q in (0.2, 0.6):
        assert oracles.delta_direct(f, q) == pytest.approx((1 - q) / 15, rel=1e-12)


def test_delta_direct_matches_increment_form():
    gen = substream(2)
    f = random_monotone(gen, 30)
    p = gt.design_point(f, 0.37, n=100, eps=0.1)
    assert oracles.delta_direct(f, 0.37) == pytest.approx(p.delta, rel=1e-10)


def test_delta_direct_survives_catastrophic_cancellation():
    # P+ and P- are both ~0.99999...; their float difference would be pure
    # noise, the exact-rational path is not
    f = gt.build(gt.classical(), 200)
    q = 0.9
    direct = oracles.delta_direct(f, q)
    p = gt.design_point(f, q, n=500, eps=0.01)
    assert direct == pytest.approx(p.delta, rel=1e-10)
    assert direct == pytest.approx(0.1**200, rel=1e-10)


def test_positivity_exact_agrees():
    gen = substream(44)
    f = random_monotone(gen, 12)
    q = 0.41
    exact = oracles.positivity_exact(f, q)
    fast = positivity_probabilities(f, q)
    for e, g in zip(exact, fast):
        assert g == pytest.approx(e, rel=1e-12)


# ------------------------------------------------- exact hypergeometric spots

def test_hypergeom_exact_vs_log_space():
    from grouptest.numerics import hypergeom_log_pmf

    gen = substream(3)
    for _ in range(10):
        n = int(gen.integers(5, 61))
        d = int(gen.integers(1, n))
        chi = int(gen.integers(1, n))
        fvals = np.sort(gen.random(d + 1))
        total, mean, var = oracles.hypergeom_exact_moments(n, d, chi, fvals)
        assert float(total) == pytest.approx(1.0, abs=1e-12)
        a = np.arange(d + 1)
        w = np.exp(hypergeom_log_pmf(n, d, chi, a))
        assert float(w @ fvals) == pytest.approx(float(mean), rel=1e-10, abs=1e-30)
        got_var = float(w @ (fvals - float(mean)) ** 2)
        assert got_var == pytest.approx(float(var), rel=1e-10, abs=1e-25)


def test_hypergeom_exact_gated():
    with pytest.raises(ParameterOutOfRange):
        oracles.hypergeom_exact_moments(61, 3, 5, [0.0, 0.5, 0.7, 1.0])


# ------------------------------------------------------------ micro instances

def test_micro_instance_limits():
    m = codec.generate_matrix(9, 3, 0.5, seed=0)
    f = gt.build(gt.classical(), 1)
    with pytest.raises(ParameterOutOfRange):
        oracles.MicroInstance(matrix=m, f=f)


def test_exhaustive_error_zero_for_perfect_separation():
    # identity-like rows isolate each item; classical tests are noiseless
    n = 4
    rows = np.eye(n, dtype=bool)
    m = codec.TestMatrix(T=n, n=n, q=0.4, seed=0, rows=rows)
    f = gt.build(gt.classical(), 1)
    inst = oracles.MicroInstance(matrix=m, f=f)
    assert oracles.exhaustive_error_probability(inst) == pytest.approx(0.0, abs=1e-12)


def test_exhaustive_error_complements_success():
    import itertools

    gen = substream(8)
    m = codec.generate_matrix(6, 4, 0.4, seed=77)
    f = gt.TestFunction(d=1, values=[0.1, 0.8])
    inst = oracles.MicroInstance(matrix=m, f=f)
    err = oracles.exhaustive_error_probability(inst)
    # independent recomputation of the success mass
    success = 0.0
    sets = list(itertools.combinations(range(6), 1))
    for defectives in sets:
        z = codec.defective_counts(m, list(defectives))
        pz = f.values[z]
        for bits_tuple in itertools.product((0, 1), repeat=4):
            bits = np.array(bits_tuple, dtype=bool)
            weight = float(np.prod(np.where(bits, pz, 1 - pz))) / len(sets)
            res = codec.decode(m, codec.Outcomes(bits=bits, seed=0), f)
            if set(res.estimated_defectives.tolist()) == set(defectives):
                success += weight
    assert err == pytest.approx(1.0 - success, abs=1e-12)
    assert 0.0 <= err <= 1.0


# -------------------------------------------------------- empirical positivity

def test_empirical_positivity_classical_in_defective():
    f = gt.build(gt.classical(), 5)
    rate, stderr = oracles.empirical_positivity(
        f, 0.3, "item_in_defective", 10_000, seed=1)
    assert rate == 1.0  # the item itself makes the test positive


def test_empirical_positivity_matches_formulas():
    f = gt.build(gt.linear(), 10)
    q = 0.5
    p_minus, p_plus, q_minus, q_plus = positivity_probabilities(f, q)
    targets = {
        "item_in_defective": p_plus,
        "item_in_nondefective": p_minus,
        "item_out_defective": q_plus,
        "item_out_nondefective": q_minus,
    }
    for condition, target in targets.items():
        rate, stderr = oracles.empirical_positivity(f, q, condition, 100_000, seed=7)
        assert abs(rate - target) <= 4 * stderr


def test_empirical_positivity_pminus_equals_qminus():
    f = gt.build(gt.sigmoid(), 12)
    r_in, se_in = oracles.empirical_positivity(
        f, 0.4, "item_in_nondefective", 100_000, seed=3)
    r_out, se_out = oracles.empirical_positivity(
        f, 0.4, "item_out_nondefective", 100_000, seed=4)
    assert abs(r_in - r_out) <= 4 * (se_in + se_out)


def test_empirical_positivity_preconditions():
    f = gt.build(gt.classical(), 3)
    with pytest.raises(ParameterOutOfRange):
        oracles.empirical_positivity(f, 0.5, "item_in_defective", 100, seed=0)
    with pytest.raises(ParameterOutOfRange):
        oracles.empirical_positivity(f, 0.5, "bogus", 10_000, seed=0)
