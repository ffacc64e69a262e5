import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutlab import chains
from cutlab.chains import (GRAVEYARD, KilledNetwork, bd_from_drifts,
                           constant_drift_chain, from_spec, network_transition,
                           poly_green_chain, truncate_kernel)
from cutlab.errors import DriftOutOfRange, EmptyWindow, UnknownVertex


def test_constant_drift_plugin():
    ch = bd_from_drifts(lambda i: 0.25, validate_up_to=32)
    assert ch.e_at(0) == 1.0
    for i in range(1, 33):
        assert ch.e_at(i) == 0.75


def test_boundary_drift_rejected():
    with pytest.raises(DriftOutOfRange):
        bd_from_drifts(lambda i: 0.5 if i == 5 else 0.25, validate_up_to=8)
    with pytest.raises(DriftOutOfRange):
        bd_from_drifts(lambda i: -0.5, validate_up_to=2)


def test_zero_drift_chain_is_valid():
    # recurrent chains construct fine; only transience-requiring ops fail
    ch = bd_from_drifts(lambda i: 0.0, validate_up_to=64)
    assert np.all(ch.e_array(64)[1:] == 0.5)


def test_lazy_validation_beyond_range():
    ch = bd_from_drifts(lambda i: 0.25 if i < 100 else 0.7, validate_up_to=50)
    with pytest.raises(DriftOutOfRange):
        ch.e_at(150)


def test_drift_cache_thread_safety():
    calls = []

    def drift(i):
        calls.append(int(i))
        return 0.25

    ch = bd_from_drifts(drift, validate_up_to=4)
    threads = [threading.Thread(target=lambda: ch.e_array(5000))
               for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    e = ch.e_array(5000)
    assert e.shape == (5001,) and np.all(e[1:] == 0.75)


def _two_edge_vertex():
    return KilledNetwork({0: [(1, 1.0), (2, 1.0)],
                          1: [(0, 1.0)],
                          2: [(0, 1.0)]})


def test_network_transition_no_killing():
    net = _two_edge_vertex()
    assert network_transition(net, 0, 1) == 0.5
    assert network_transition(net, 0, 2) == 0.5
    assert network_transition(net, 0, GRAVEYARD) == 0.0


def test_network_transition_equal_killing_mass():
    net = KilledNetwork({0: [(1, 2.0)], 1: [(0, 2.0)]},
                        killing=lambda u: 2.0 if u == 0 else 0.0)
    assert network_transition(net, 0, GRAVEYARD) == 0.5


def test_network_transition_star_arithmetic():
    # c(u) = 3 split over two edges (2 and 1), K(u) = 1
    net = KilledNetwork({0: [(1, 2.0), (2, 1.0)], 1: [(0, 2.0)], 2: [(0, 1.0)]},
                        killing=lambda u: 1.0 if u == 0 else 0.0)
    assert network_transition(net, 0, 1) == 0.5
    assert network_transition(net, 0, GRAVEYARD) == 0.25


def test_network_transition_unknown_vertex():
    with pytest.raises(UnknownVertex):
        network_transition(_two_edge_vertex(), 99, 0)


def test_network_row_sums_randomized():
    rng = np.random.default_rng(7)
    for trial in range(100):
        n = int(rng.integers(2, 9))
        weights = rng.uniform(0.1, 3.0, size=(n, n))
        weights = np.triu(weights, 1)
        weights += weights.T
        kill = rng.uniform(0.0, 2.0, size=n) * rng.integers(0, 2, size=n)
        adj = {i: [(j, weights[i, j]) for j in range(n) if weights[i, j] > 0]
               for i in range(n)}
        net = KilledNetwork(adj, killing=lambda u, k=kill: float(k[u]))
        for u in range(n):
            total = network_transition(net, u, GRAVEYARD)
            total += sum(network_transition(net, u, v) for v in range(n))
            assert abs(total - 1.0) <= 1e-12


def test_truncate_kernel_boundary_leak():
    ch = constant_drift_chain(0.25)
    kern = truncate_kernel(ch, range(0, 3))
    assert kern.leak[2] == 0.75  # E_2 leaves the window
    assert kern.leak[0] == 0.0 and kern.leak[1] == 0.0
    rowsum = np.asarray(kern.matrix.sum(axis=1)).ravel() + kern.leak
    assert np.max(np.abs(rowsum - 1.0)) <= 1e-12
    assert kern.matrix.min() >= 0.0


def test_truncate_kernel_network_inside_window_stochastic():
    net = _two_edge_vertex()
    kern = truncate_kernel(net, [0, 1, 2])
    assert np.all(kern.leak == 0.0)
    rowsum = np.asarray(kern.matrix.sum(axis=1)).ravel()
    assert np.allclose(rowsum, 1.0, atol=1e-12)


def test_truncate_kernel_degenerate_window():
    ch = constant_drift_chain(0.25)
    kern = truncate_kernel(ch, range(0, 1))
    assert kern.leak[0] == 1.0  # E_0 = 1 leaves immediately


def test_truncate_kernel_empty_window():
    with pytest.raises(EmptyWindow):
        truncate_kernel(constant_drift_chain(0.25), range(0, 0))


def test_poly_green_drift_closed_form():
    ch = poly_green_chain(2.0, 1.0)
    for n in (1, 5, 40):
        assert ch.drift_at(n) == pytest.approx(1.0 / (2 * (n + 2)), rel=1e-12)


def test_from_spec_kinds():
    assert from_spec({"kind": "constant_drift", "p": 0.25}).e_at(3) == 0.75
    tab = from_spec({"kind": "table", "values": [0.1, 0.2]})
    assert tab.drift_at(1) == pytest.approx(0.1)
    assert tab.drift_at(50) == pytest.approx(0.2)
    pg = from_spec({"kind": "poly_green", "shift": 2.0, "power": 1.0})
    assert pg.exact_log_h is not None
    prof = from_spec({"kind": "greens_profile", "profile": "poly", "c": 1.0})
    assert prof.drift_at(1) == pytest.approx(0.25, rel=1e-9)
    sharp = from_spec({"kind": "sharpness", "profile": "sqrt_log", "M": 2})
    assert 0.0 < sharp.drift_at(1) < 0.5
    with pytest.raises(ValueError):
        from_spec({"kind": "nope"})


@settings(max_examples=50, deadline=None)
@given(p=st.floats(min_value=-0.49, max_value=0.49))
def test_drift_interval_accepted(p):
    ch = bd_from_drifts(lambda i: p, validate_up_to=4)
    assert 0.0 < ch.e_at(1) < 1.0
    assert ch.e_at(0) == 1.0
