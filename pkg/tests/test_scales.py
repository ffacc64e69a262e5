import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutlab import construct, greens, scales, simulate
from cutlab.chains import constant_drift_chain
from cutlab.errors import (InsufficientSamples, NonPositiveEntry, ScaleMissing,
                           SequenceDoesNotReach)

IDENT = construct.PsiInv.make_identity()
CONSTANT = constant_drift_chain(0.25)


@pytest.fixture(scope="module")
def table():
    return greens.greens_from_d(CONSTANT, 8192, tol=1e-12)


# --- running minima ----------------------------------------------------------

def test_running_minima_example():
    z = np.array([1.0, 0.5, 0.7, 0.2])
    assert np.allclose(scales.running_minima(z), [1.0, 0.5, 0.5, 0.2])


def test_running_minima_constant():
    z = np.full(5, 0.3)
    assert np.allclose(scales.running_minima(z), 0.3)


def test_running_minima_rejects_nonpositive():
    with pytest.raises(NonPositiveEntry):
        scales.running_minima(np.array([1.0, 0.0, 0.5]))


def test_minima_change_exactly_at_new_maxima(table):
    traj = simulate.run_bd(CONSTANT, 400, seed=5, master_seed=1)
    z = np.exp(traj.log_z(table))
    zstar = scales.running_minima(z)
    run_max = traj.running_max()
    changes = np.nonzero(np.diff(zstar) < 0)[0] + 1
    new_max = np.nonzero(np.diff(run_max) > 0)[0] + 1
    assert np.array_equal(changes, new_max)


# --- decomposition ----------------------------------------------------------

def test_decompose_half_step_sequence():
    # z_n = e^{-n/2}: scale 1 holds {e^-1, e^-1.5, e^-2}
    z = np.exp(-0.5 * np.arange(0, 14, dtype=float))
    d = scales.decompose(z=z)
    assert d.k0 == 0
    s1 = d.scale(1)
    assert np.allclose(s1.log_d, [-1.0, -1.5, -2.0])
    assert s1.n_drops == 2
    assert np.allclose(s1.log_ratios, -0.5)


@pytest.mark.parametrize("gen", [
    lambda: np.exp(-0.5 * np.arange(0, 20, dtype=float)),
    lambda: np.exp(-np.cumsum(np.random.default_rng(3).uniform(0, 0.8, 40))),
    lambda: np.exp(-np.cumsum(np.random.default_rng(9).uniform(0, 2.5, 30))),
])
def test_per_scale_product_invariant(gen):
    d = scales.decompose(z=gen())
    for k in d.ks:
        assert abs(d.scale(k).log_ratios.sum() + 1.0) <= 1e-9
        assert d.scale(k).log_d[0] == -float(k)
        assert d.scale(k).log_d[-1] == -float(k + 1)


def test_decompose_idempotent_on_running_minima():
    rng = np.random.default_rng(11)
    z = np.exp(-np.cumsum(rng.uniform(-0.3, 0.8, 60)) - 0.1)
    z = z / z[0] * 0.9
    d1 = scales.decompose(z=z)
    d2 = scales.decompose(z=scales.running_minima(z))
    assert d1.ks == d2.ks
    for k in d1.ks:
        assert np.array_equal(d1.scale(k).log_d, d2.scale(k).log_d)


def test_decompose_full_scale_jump():
    z = np.array([1.0, math.exp(-3.4)])
    d = scales.decompose(z=z)
    s1 = d.scale(1)
    assert s1.n_drops == 1
    assert np.allclose(s1.log_ratios, [-1.0])


def test_decompose_unreached_scale():
    with pytest.raises(SequenceDoesNotReach):
        scales.decompose(z=np.array([1.0, 0.9, 0.8]), k_max=3)


def test_scale_missing():
    d = scales.decompose(z=np.exp(-0.5 * np.arange(0, 10, dtype=float)))
    with pytest.raises(ScaleMissing):
        d.scale(40)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.5), min_size=5, max_size=60))
def test_product_invariant_property(steps):
    log_z = -np.cumsum(np.asarray(steps))
    d = scales.decompose(log_z=log_z)
    for k in d.ks:
        assert abs(d.scale(k).log_ratios.sum() + 1.0) <= 1e-9


# --- psi-good ---------------------------------------------------------------

def test_psi_good_identity_on_half_steps():
    z = np.exp(-0.5 * np.arange(0, 14, dtype=float))
    d = scales.decompose(z=z)
    rep = scales.psi_good(d, 1, IDENT)
    # all drops have ratio e^{-1/2} <= Psi(1) = e^{-1/2}: product e^{-1}
    assert rep.good and rep.n_large == 2
    assert rep.log_large_product == pytest.approx(-1.0, abs=1e-12)


def test_psi_good_single_full_drop():
    z = np.array([1.0, math.exp(-3.4)])
    d = scales.decompose(z=z)
    rep = scales.psi_good(d, 1, IDENT)
    assert rep.good  # the single e^{-1} drop is large and carries all decay


def test_psi_good_empty_product_not_good():
    # many small drops: no large ones, empty product = 1 > e^{-1/2}
    z = np.exp(-np.arange(0, 80, dtype=float) * 0.05)
    d = scales.decompose(z=z)
    rep = scales.psi_good(d, 1, IDENT)
    assert rep.n_large == 0 and not rep.good


# --- permadrops --------------------------------------------------------------

def test_permadrop_monotone_sequence_all_large_are_perma(table):
    # strictly increasing path: Z strictly decreasing, nothing ever recovers
    states = np.arange(0, 41, dtype=np.int32)
    traj = simulate.Trajectory(CONSTANT, states, 0, 0, 40)
    log_z = traj.log_z(table)
    d = scales.decompose(log_z=log_z)
    for k in d.ks[:6]:
        rep = scales.permadrop_count(traj, table, d, k, IDENT)
        assert rep.r_observed == rep.n_large
        assert rep.r_weighted <= rep.n_large


def test_permadrop_recovery_excluded(table):
    # force a recovery: up to 6, back to 2, then away
    states = np.array(list(range(0, 7)) + [5, 4, 3, 2] + list(range(3, 40)),
                      dtype=np.int32)
    traj = simulate.Trajectory(CONSTANT, states, 0, 0, len(states) - 1)
    d = scales.decompose(log_z=traj.log_z(table))
    # scale of H(6) = 3^-6: k = floor(6 ln3) = 6: the drop onto H(6)
    # recovered (walk returned to 2 << recovery position), so R excludes it
    k = int(-table.log_h[6])  # 6.59 -> 6
    rep = scales.permadrop_count(traj, table, d, k, IDENT)
    assert rep.r_observed < max(rep.n_large, 1)


def test_permadrop_certified_below_10x_brute_force(table):
    for seed in range(10):
        full = simulate.run_bd(CONSTANT, 10 ** 4, seed=seed, master_seed=31)
        short = full.prefix(10 ** 3)
        d_short = scales.decompose(log_z=short.log_z(table))
        d_full = scales.decompose(log_z=full.log_z(table))
        for k in d_short.ks:
            cert = scales.permadrop_count(short, table, d_short, k, IDENT,
                                          certify_tol=1e-6)
            brute = scales.permadrop_count(full, table, d_full, k, IDENT)
            assert cert.r_certified <= brute.r_observed


def test_never_recovery_probe(table):
    probe = scales.never_recovery_probe(CONSTANT, table, 5, 20000,
                                        master_seed=12)
    assert probe.expected == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert probe.passed
    assert probe.max_residual < 1e-9


# --- sandwich ---------------------------------------------------------------

def test_sandwich_needs_seeds(table):
    with pytest.raises(InsufficientSamples):
        scales.sandwich_check(CONSTANT, table, IDENT, [2, 3], 10)


def test_sandwich_constant_chain(table):
    rep = scales.sandwich_check(CONSTANT, table, IDENT, range(2, 9), 2000,
                                master_seed=5)
    assert rep.all_lower_ok and rep.all_upper_ok
    by_k = {s.k: s for s in rep.scales}
    # scales 2..5 have no large realized drops on this chain; 6..8 do
    for k in (2, 3, 4, 5):
        assert by_k[k].e_r == 0.0
    for k in (6, 7, 8):
        assert abs(by_k[k].e_r - 2.0 / 3.0) <= 5 * by_k[k].e_r_sigma
    # the deep-subscale event only fires at k = 8 among these scales
    assert by_k[8].p_good_deep == 1.0
    assert by_k[2].p_good_deep == 0.0


def test_sandwich_ballistic_chain_trivial():
    ch = constant_drift_chain(0.49)
    tab = greens.greens_from_d(ch, 512, tol=1e-12)
    rep = scales.sandwich_check(ch, tab, IDENT, [2, 3, 4], 1000, master_seed=6)
    assert rep.all_lower_ok and rep.all_upper_ok
    for s in rep.scales:
        assert s.e_r <= 1.0 + 3 * s.e_r_sigma  # single near-complete drop


def test_sandwich_skips_unreached_scale(table):
    rep = scales.sandwich_check(CONSTANT, table, IDENT, [2, 3], 1000,
                                master_seed=7, stop_level=3)
    # H(3) = e^{-3.3} never crosses the scale-3 floor e^{-4}: skipped
    by_k = {s.k: s for s in rep.scales}
    assert by_k[3].skipped and not by_k[2].skipped


def test_c_hat_stability_rule():
    assert scales.c_hat_stable(0.0, 0.18)
    assert scales.c_hat_stable(1.0, 1.15)
    assert not scales.c_hat_stable(1.0, 2.0)


def test_scales_csv_header(tmp_path, table):
    traj = simulate.run_bd(CONSTANT, 2000, seed=1, master_seed=2)
    _, rows = scales.audit_trajectory(traj, table, IDENT)
    path = tmp_path / "audit.csv"
    scales.audits_to_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,N_k,large_drops,R_k,psi_good,residual"
    assert len(lines) == len(rows) + 1
