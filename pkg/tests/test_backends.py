import numpy as np
import pytest

from cutlab import backend
from cutlab._rng import stream_key, u01, u01_block
from cutlab.chains import constant_drift_chain, poly_green_chain


def test_rng_block_matches_scalar():
    key = stream_key(123, 45)
    block = u01_block(key, 10, 64)
    singles = np.array([u01(key, 10 + i) for i in range(64)])
    assert np.array_equal(block, singles)


def test_rng_streams_differ():
    a = u01_block(stream_key(1, 0), 0, 32)
    b = u01_block(stream_key(1, 1), 0, 32)
    c = u01_block(stream_key(2, 0), 0, 32)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_counter_random_access():
    key = stream_key(7, 7)
    assert np.array_equal(u01_block(key, 1000, 8), u01_block(key, 1000, 8))
    whole = u01_block(key, 0, 100)
    assert np.array_equal(whole[40:60], u01_block(key, 40, 20))


@pytest.fixture(scope="module")
def both():
    impls = backend.backends()
    if len(impls) < 2:
        pytest.skip("compiled backend unavailable")
    return impls


@pytest.mark.parametrize("chain_fn,label", [
    (lambda: constant_drift_chain(0.25), "constant"),
    (lambda: poly_green_chain(2.0, 1.0), "poly"),
])
def test_backends_bit_identical_paths(both, chain_fn, label):
    chain = chain_fn()
    e = chain.e_array(4096)
    key = stream_key(99, 3)
    results = {}
    for name, mod in both.items():
        out = np.zeros(5001, dtype=np.int32)
        n, reason = mod.bd_path(e, 0, 5000, key, 0, -1, out)
        results[name] = (n, reason, out.copy())
    (n1, r1, s1), (n2, r2, s2) = results.values()
    assert n1 == n2 and r1 == r2
    assert np.array_equal(s1, s2)


def test_backends_bit_identical_with_stop_and_resume(both):
    chain = constant_drift_chain(0.25)
    e = chain.e_array(512)
    key = stream_key(5, 11)
    for name, mod in both.items():
        out = np.zeros(2001, dtype=np.int32)
        n, reason = mod.bd_path(e, 0, 2000, key, 0, 37, out)
        assert reason == 1 and out[n] == 37
        # resuming at the saved counter reproduces the unstopped path
        out2 = np.zeros(2001, dtype=np.int32)
        n2, _ = mod.bd_path(e, 37, 2000 - n, key, n, -1, out2)
        full = np.zeros(2001, dtype=np.int32)
        mod.bd_path(e, 0, 2000, key, 0, -1, full)
        assert np.array_equal(np.concatenate([out[:n], out2[: n2 + 1]]),
                              full[: n + n2 + 1])


def test_backends_visit_count_agree(both):
    states = np.array([0, 1, 2, 1, 2, 3, 2, 3], dtype=np.int32)
    counts = {name: mod.visit_count(states, len(states) - 1, 2)
              for name, mod in both.items()}
    assert set(counts.values()) == {3}


def test_cap_reach_reason(both):
    chain = constant_drift_chain(0.4)
    e = chain.e_array(16)
    key = stream_key(1, 1)
    for name, mod in both.items():
        out = np.zeros(10001, dtype=np.int32)
        n, reason = mod.bd_path(e, 0, 10000, key, 0, -1, out)
        assert reason == 2 and out[n] == 16  # stops at the cap index
