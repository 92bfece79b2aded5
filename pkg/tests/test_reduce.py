import numpy as np
from hypothesis import given, strategies as st

from pompeiu.reduce import compensated_sum, get_threads, map_chunks, set_threads, threads, weighted_sum


def test_compensated_sum_cancellation():
    x = np.array([1e16, 1.0, -1e16, 1.0])
    assert compensated_sum(x) == 2.0
    assert compensated_sum(np.zeros(0)) == 0.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300))
def test_compensated_sum_accuracy(xs):
    import math
    assert abs(float(compensated_sum(np.array(xs))) - math.fsum(xs)) <= 1e-9 * (1 + sum(map(abs, xs))) * 1e-6


@given(st.integers(0, 2**32 - 1), st.integers(1, 20000), st.sampled_from([1, 2, 3, 8]))
def test_weighted_sum_independent_of_threads(seed, n, workers):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    w = rng.normal(size=n)
    with threads(1):
        serial = weighted_sum(lambda p: np.exp(p), z, w, chunk_size=1024)
    with threads(workers):
        par = weighted_sum(lambda p: np.exp(p), z, w, chunk_size=1024)
    assert serial == par  # bit-for-bit


def test_weighted_sum_matrix_values():
    z = np.arange(5.0)
    out = weighted_sum(lambda p: p[:, None, None] * np.eye(2), z, np.ones(5))
    assert np.array_equal(out, 10.0 * np.eye(2))
    assert weighted_sum(lambda p: p, np.zeros(0), np.zeros(0)) == 0.0


def test_map_chunks_order_and_threads():
    with threads(4):
        assert get_threads() == 4
        assert map_chunks(lambda a, b: (a, b), 10, 3) == [(0, 3), (3, 6), (6, 9), (9, 10)]
    set_threads(0)
    assert get_threads() >= 1
    set_threads(1)
