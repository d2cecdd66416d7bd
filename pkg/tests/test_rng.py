import numpy as np
import pytest
from scipy import stats

from orwalk.rng import TRITS, RngStream, rademacher_sign, rademacher_table


def test_raw_words_match_numpy_philox():
    for seed, index in [(0, 0), (5, 3), (2**63 + 1, 2**40)]:
        ours = RngStream(seed, index).u64(37)
        ref = np.random.Philox(key=np.array([seed, index], dtype=np.uint64)).random_raw(37)
        np.testing.assert_array_equal(ours, ref)


def test_counter_counts_blocks():
    rng = RngStream(1, 2)
    assert rng.counter == 0
    rng.u64(4)
    assert rng.counter == 1
    rng.u64(1)
    assert rng.counter == 2


def test_same_key_same_stream_and_snapshot():
    a, b = RngStream(9, 4), RngStream(9, 4)
    np.testing.assert_array_equal(a.trits(1000), b.trits(1000))
    snap = a.snapshot()
    np.testing.assert_array_equal(a.bits(500), snap.bits(500))


def test_distinct_streams_differ():
    assert not np.array_equal(RngStream(9, 4).u64(8), RngStream(9, 5).u64(8))
    assert not np.array_equal(RngStream(9, 4).u64(8), RngStream(10, 4).u64(8))
    np.testing.assert_array_equal(RngStream(9, 4).spawn(5).u64(8), RngStream(9, 5).u64(8))


def test_trit_table_decodes_base3():
    for byte in (0, 1, 80, 242):
        digits = TRITS[byte]
        assert sum(int(d) * 3**k for k, d in enumerate(digits)) == byte


def test_trits_uniform_chi_square():
    t = RngStream(1, 0).trits(300_000)
    counts = np.bincount(t, minlength=3)
    assert counts.size == 3
    assert stats.chisquare(counts).pvalue > 1e-4


def test_bits_balanced():
    b = RngStream(3, 0).bits(200_000)
    assert set(np.unique(b)) <= {0, 1}
    assert abs(b.mean() - 0.5) < 5 * 0.5 / np.sqrt(b.size)


def test_geometric_law():
    g = RngStream(1, 1).geometric(300_000)
    assert g.min() == 0
    k = np.arange(6)
    expected = (2 / 3) * (1 / 3) ** k
    observed = np.array([(g == j).mean() for j in k])
    np.testing.assert_allclose(observed, expected, atol=5e-3)


def test_scalar_and_block_draws_agree():
    a, b = RngStream(4, 0), RngStream(4, 0)
    np.testing.assert_array_equal([a.trit() for _ in range(50)], b.trits(50))


def test_rademacher_signs_deterministic_and_balanced():
    out = np.empty(2001, dtype=np.int8)
    rademacher_table(17, -1000, 1000, out)
    assert set(np.unique(out)) == {-1, 1}
    assert abs(out.mean()) < 0.15
    assert rademacher_sign(17, -1000) == out[0]
    assert rademacher_sign(17, 5) == out[1005]


def test_rejects_out_of_range_keys():
    with pytest.raises((ValueError, OverflowError)):
        RngStream(-1, 0)
