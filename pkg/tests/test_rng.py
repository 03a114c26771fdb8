import numpy as np
import pytest

from lecam_euler.sde_core.rng import replicate_normals, stream


def test_same_key_same_stream():
    a = stream(42, 3, 1).standard_normal(100)
    b = stream(42, 3, 1).standard_normal(100)
    assert np.array_equal(a, b)


def test_distinct_keys_differ():
    base = stream(42, 3, 1).standard_normal(50)
    for key in [(42, 3, 2), (42, 4, 1), (43, 3, 1), (42, 3)]:
        assert not np.array_equal(base, stream(*key).standard_normal(50))


def test_prefix_of_longer_draw():
    short = stream(7, 0).standard_normal(40)
    long = stream(7, 0).standard_normal(400)
    assert np.array_equal(short, long[:40])


def test_replicate_rows_do_not_depend_on_batch():
    full = replicate_normals(5, (2, 0), range(10), 30)
    part = replicate_normals(5, (2, 0), range(4, 7), 30)
    assert np.array_equal(full[4:7], part)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        stream(seed)
