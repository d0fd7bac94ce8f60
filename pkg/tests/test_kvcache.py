import hashlib

import numpy as np
import pytest

from siftlab.errors import InvalidInput, ShapeError
from siftlab.kvcache import KvCache


def _filled(n, d=4, seed=0):
    rng = np.random.default_rng(seed)
    cache = KvCache(d)
    for _ in range(n):
        cache.append(rng.normal(size=d), rng.normal(size=d))
    return cache


def test_append_first_row():
    cache = KvCache(3)
    k = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 5.0, 6.0])
    cache.append(k, v)
    assert len(cache) == 1
    np.testing.assert_array_equal(cache.keys[0], k)
    np.testing.assert_array_equal(cache.values[0], v)


def test_append_preserves_prior_rows():
    cache = _filled(3)
    before_k = cache.keys.copy()
    before_v = cache.values.copy()
    cache.append(np.ones(4), np.ones(4))
    assert len(cache) == 4
    np.testing.assert_array_equal(cache.keys[:3], before_k)
    np.testing.assert_array_equal(cache.values[:3], before_v)


def test_snapshot_checksum_stable_across_appends():
    cache = _filled(10)
    digest = hashlib.sha256(np.ascontiguousarray(cache.values).tobytes()).hexdigest()
    for _ in range(100):
        cache.append(np.zeros(4), np.zeros(4))
    after = hashlib.sha256(np.ascontiguousarray(cache.values[:10]).tobytes()).hexdigest()
    assert digest == after


def test_thousand_appends():
    cache = _filled(1000)
    assert cache.keys.shape == (1000, 4)
    assert cache.values.shape == (1000, 4)


def test_append_shape_error():
    cache = KvCache(4)
    with pytest.raises(ShapeError):
        cache.append(np.zeros(3), np.zeros(4))


def test_gather_all_is_identity():
    cache = _filled(7)
    np.testing.assert_array_equal(
        cache.gather_values(np.arange(7)), cache.values
    )


def test_gather_empty():
    cache = _filled(4)
    assert cache.gather_values([]).shape == (0, 4)


def test_gather_subset():
    cache = _filled(4)
    out = cache.gather_values([1, 3])
    np.testing.assert_array_equal(out[0], cache.values[1])
    np.testing.assert_array_equal(out[1], cache.values[3])


def test_gather_out_of_range():
    cache = _filled(4)
    with pytest.raises(IndexError):
        cache.gather_values([1, 4])


def test_gather_non_increasing():
    cache = _filled(4)
    with pytest.raises(InvalidInput):
        cache.gather_values([2, 1])
    with pytest.raises(InvalidInput):
        cache.gather_values([1, 1])
