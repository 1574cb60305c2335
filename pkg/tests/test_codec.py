import itertools

import numpy as np
import pytest

import grouptest as gt
from grouptest import codec
from grouptest.errors import DefectiveCountMismatch, ParameterOutOfRange
from grouptest.oracles import reference_decode
from grouptest.rng import substream


def test_matrix_deterministic():
    a = codec.generate_matrix(100, 40, 0.3, seed=11)
    b = codec.generate_matrix(100, 40, 0.3, seed=11)
    assert np.array_equal(a.rows, b.rows)
    c = codec.generate_matrix(100, 40, 0.3, seed=12)
    assert not np.array_equal(a.rows, c.rows)


def test_matrix_rows_are_prefix_stable():
    # extending T preserves the earlier rows (block streams are per-row-range)
    small = codec.generate_matrix(50, 300, 0.4, seed=3)
    big = codec.generate_matrix(50, 700, 0.4, seed=3)
    assert np.array_equal(big.rows[:300], small.rows)


def test_matrix_density_many_configs():
    gen = substream(17)
    for _ in range(50):
        n = int(gen.integers(20, 400))
        T = int(gen.integers(20, 400))
        q = float(gen.uniform(0.05, 0.95))
        m = codec.generate_matrix(n, T, q, seed=int(gen.integers(0, 2**31)))
        count = int(m.rows.sum())
        std = np.sqrt(n * T * q * (1 - q))
        assert abs(count - n * T * q) <= 4 * std + 1


def test_matrix_preconditions():
    with pytest.raises(ParameterOutOfRange):
        codec.generate_matrix(0, 5, 0.5, 1)
    with pytest.raises(ParameterOutOfRange):
        codec.generate_matrix(5, 0, 0.5, 1)
    with pytest.raises(ParameterOutOfRange):
        codec.generate_matrix(5, 5, 0.0, 1)


def test_outcomes_classical_deterministic_rows():
    f = gt.build(gt.classical(), 2)
    m = codec.generate_matrix(30, 200, 0.2, seed=5)
    defectives = [4, 9]
    out = codec.simulate_outcomes(m, defectives, f, seed=8)
    z = codec.defective_counts(m, defectives)
    # classical f: outcome is exactly 1{Z >= 1}
    assert np.array_equal(out.bits, z >= 1)


def test_outcomes_linear_saturated_rows():
    f = gt.build(gt.linear(), 3)
    rows = np.ones((4, 6), dtype=bool)
    m = codec.TestMatrix(T=4, n=6, q=0.4, seed=0, rows=rows)
    out = codec.simulate_outcomes(m, [0, 1, 2], f, seed=1)
    assert out.bits.all()  # Z = d in every test, f(d) = 1


def test_outcomes_count_mismatch():
    f = gt.build(gt.classical(), 3)
    m = codec.generate_matrix(10, 20, 0.5, seed=1)
    with pytest.raises(DefectiveCountMismatch):
        codec.simulate_outcomes(m, [1, 2], f, seed=0)
    with pytest.raises(ParameterOutOfRange):
        codec.simulate_outcomes(m, [1, 2, 99], f, seed=0)


def test_rule_selection_matches_q():
    f = gt.build(gt.classical(), 1)
    m1 = codec.generate_matrix(20, 50, 0.5, seed=2)
    out1 = codec.simulate_outcomes(m1, [3], f, seed=2)
    assert codec.decode(m1, out1, f).rule_used == "rule1"
    m2 = codec.generate_matrix(20, 50, 0.51, seed=2)
    out2 = codec.simulate_outcomes(m2, [3], f, seed=2)
    assert codec.decode(m2, out2, f).rule_used == "rule2"


def test_exact_threshold_tie_is_nondefective():
    # f=[0.25, 0.75], d=1, q=0.5: P- = 0.5, P+ = 0.75, threshold exactly 5/8
    f = gt.TestFunction(d=1, values=[0.25, 0.75])
    rows = np.zeros((8, 2), dtype=bool)
    rows[:, 0] = True
    m = codec.TestMatrix(T=8, n=2, q=0.5, seed=0, rows=rows)
    bits = np.array([1, 1, 1, 1, 1, 0, 0, 0], dtype=bool)  # item 0: 5/8 positive
    res = codec.decode(m, codec.Outcomes(bits=bits, seed=0), f)
    assert res.threshold == 0.625
    assert res.estimated_defectives.tolist() == []  # tie sits on the non-defective side
    bits_above = np.array([1, 1, 1, 1, 1, 1, 0, 0], dtype=bool)  # 6/8 > 5/8
    res_above = codec.decode(m, codec.Outcomes(bits=bits_above, seed=0), f)
    assert res_above.estimated_defectives.tolist() == [0]


def test_zero_tests_in_item_is_nondefective():
    f = gt.build(gt.classical(), 1)
    rows = np.zeros((3, 4), dtype=bool)
    rows[:, 0] = True
    m = codec.TestMatrix(T=3, n=4, q=0.3, seed=0, rows=rows)
    bits = np.ones(3, dtype=bool)
    res = codec.decode(m, codec.Outcomes(bits=bits, seed=0), f)
    assert res.estimated_defectives.tolist() == [0]
    assert res.undefined_items == 3


def test_classical_high_T_recovers_exactly():
    f = gt.build(gt.classical(), 4)
    n = 50
    m = codec.generate_matrix(n, 2000, 1 / 4, seed=21)
    defectives = [3, 17, 30, 44]
    out = codec.simulate_outcomes(m, defectives, f, seed=22)
    res = codec.decode(m, out, f)
    assert res.estimated_defectives.tolist() == defectives


@pytest.mark.parametrize("q", [0.3, 0.7])
def test_decoder_matches_reference_on_all_outcomes(q):
    gen = substream(123)
    for rep in range(8):
        n = int(gen.integers(3, 9))
        T = int(gen.integers(1, 7))
        d = int(gen.integers(1, 3))
        values = np.sort(gen.random(d + 1))
        if values[0] == values[-1]:
            values[-1] = min(1.0, values[0] + 0.25)
        f = gt.TestFunction(d=d, values=values)
        m = codec.generate_matrix(n, T, q, seed=1000 + rep)
        for bits_tuple in itertools.product((0, 1), repeat=T):
            bits = np.array(bits_tuple, dtype=bool)
            res = codec.decode(m, codec.Outcomes(bits=bits, seed=0), f)
            assert set(res.estimated_defectives.tolist()) == reference_decode(m, bits, f)


def test_decode_dimension_check():
    f = gt.build(gt.classical(), 1)
    m = codec.generate_matrix(10, 5, 0.4, seed=0)
    with pytest.raises(ParameterOutOfRange):
        codec.decode(m, codec.Outcomes(bits=np.zeros(4, dtype=bool), seed=0), f)


def test_matrix_file_round_trip(tmp_path):
    m = codec.generate_matrix(37, 23, 0.45, seed=99)
    path = tmp_path / "matrix.txt"
    codec.save_matrix(m, path)
    loaded = codec.load_matrix(path)
    assert loaded.T == m.T and loaded.n == m.n
    assert loaded.q == m.q and loaded.seed == m.seed
    assert np.array_equal(loaded.rows, m.rows)
    header = path.read_text().splitlines()[0]
    assert header == f"{m.T} {m.n} {m.q!r} {m.seed}"


def test_outcomes_file_round_trip(tmp_path):
    f = gt.build(gt.classical(), 2)
    m = codec.generate_matrix(15, 40, 0.3, seed=1)
    out = codec.simulate_outcomes(m, [2, 7], f, seed=6)
    path = tmp_path / "outcomes.txt"
    codec.save_outcomes(out, path)
    loaded = codec.load_outcomes(path)
    assert np.array_equal(loaded.bits, out.bits)
    assert set(path.read_text().strip().split("\n")) <= {"0", "1"}
