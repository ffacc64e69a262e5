import math

import numpy as np
import pytest

from cutlab import killing, simulate
from cutlab.chains import constant_drift_chain, truncate_kernel
from cutlab.errors import WindowTooSmall

HALF_LINE = killing.half_line()
HL_DIST = lambda a, b: abs(a - b)


@pytest.fixture(scope="module")
def gamma3():
    prof = killing.KillingProfile(HALF_LINE, 0, 3.0, dist=lambda x: x)
    return prof, prof.killed_network()


# --- killing profile ---------------------------------------------------------

def test_profile_bracket_and_rate(gamma3):
    prof, _ = gamma3
    assert prof.bracket(0) == 2.0 and prof.bracket(1) == 2.0
    assert prof.bracket(7) == 7.0
    for x in (0, 1, 2, 5, 50, 5000):
        r = prof.rate_ratio(x)
        assert 0.0 < r <= 1.0
        assert r == min(1.0, prof.bracket(x) ** -2 * math.log(prof.bracket(x)) ** 3)


def test_profile_killed_rows_sum_to_one(gamma3):
    _, knet = gamma3
    from cutlab.chains import GRAVEYARD, network_transition

    for u in (0, 1, 3, 17):
        nbrs = [v for v, _ in knet.neighbors(u)]
        total = sum(network_transition(knet, u, v) for v in nbrs)
        total += network_transition(knet, u, GRAVEYARD)
        assert abs(total - 1.0) <= 1e-12


# --- Varopoulos-Carne ---------------------------------------------------------

def test_vc_bound_same_vertex():
    assert killing.vc_bound(HALF_LINE, 3, 3, 1, dist=HL_DIST) == pytest.approx(
        killing.VC_PREFACTOR)


def test_vc_bound_interior_distance_four():
    # interior vertices of the unit path have equal weight: the bound is the
    # Carne prefactor times e^{-d^2/(2n)}
    b = killing.vc_bound(HALF_LINE, 2, 6, 2, dist=HL_DIST)
    assert b == pytest.approx(killing.VC_PREFACTOR * math.exp(-4.0))


def test_vc_bound_disconnected_pair_is_zero():
    from cutlab.chains import KilledNetwork

    net = KilledNetwork({0: [(1, 1.0)], 1: [(0, 1.0)],
                         2: [(3, 1.0)], 3: [(2, 1.0)]})
    assert killing.vc_bound(net, 0, 3, 5) == 0.0


def test_vc_raw_bound_fails_without_carne_prefactor():
    # p_1(0, 1) = 1 on the half-line exceeds sqrt(2) e^{-1/2}: the displayed
    # inequality needs the classical factor 2
    raw = killing.vc_bound(HALF_LINE, 0, 1, 1, dist=HL_DIST, prefactor=1.0)
    assert raw < 1.0 <= killing.vc_bound(HALF_LINE, 0, 1, 1, dist=HL_DIST)


def test_vc_audit_dense_zero_violations(gamma3):
    kern = truncate_kernel(HALF_LINE, range(0, 120))
    audit = killing.vc_audit(HALF_LINE, kern, sources=range(0, 30, 3),
                             targets=range(0, 60), n_list=[1, 2, 3, 5, 9, 17],
                             dist=HL_DIST)
    assert audit.passed and audit.n_triples == 10 * 60 * 6
    _, knet = gamma3
    kk = truncate_kernel(knet, range(0, 120))
    audit_k = killing.vc_audit(knet, kk, sources=range(0, 30, 3),
                               targets=range(0, 60), n_list=[1, 2, 3, 5, 9, 17],
                               dist=HL_DIST)
    assert audit_k.passed


def test_vc_csv_rows(tmp_path):
    kern = truncate_kernel(HALF_LINE, range(0, 60))
    audit = killing.vc_audit(HALF_LINE, kern, sources=[0, 5], targets=[0, 4, 8],
                             n_list=[1, 4], dist=HL_DIST, collect_rows=True)
    path = tmp_path / "vc.csv"
    killing.vc_rows_to_csv(audit.rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,x,y,p_n,vc_bound,violation"
    assert len(lines) == audit.n_triples + 1


# --- exact p_n ----------------------------------------------------------------

def test_exact_pn_initial_indicator():
    kern = truncate_kernel(HALF_LINE, range(0, 30))
    tab = killing.exact_pn(kern, 4, 5)
    assert tab.at(0, 4) == 1.0
    assert tab.at(0, 3) == 0.0


def test_exact_pn_two_state_self_loops():
    from cutlab.chains import KilledNetwork

    # q = 1/2 flip chain via unit self-loops: p_n(x, x) = 1/2 for n >= 1
    net = KilledNetwork({0: [(0, 1.0), (1, 1.0)], 1: [(1, 1.0), (0, 1.0)]})
    kern = truncate_kernel(net, [0, 1])
    tab = killing.exact_pn(kern, 0, 6)
    assert np.allclose(tab.p[1:, 0], 0.5, atol=1e-15)


def test_exact_pn_mass_nonincreasing(gamma3):
    _, knet = gamma3
    kern = truncate_kernel(knet, range(0, 40))
    tab = killing.exact_pn(kern, 5, 30)
    total = tab.p.sum(axis=1)
    assert np.all(np.diff(total) <= 1e-15)


def test_exact_pn_leak_bound_one_sided_by_window_doubling():
    # true p_n(x, y) lies in [p_win, p_win + leak]: enlarging the window can
    # only move the value up, and stays inside the reported bracket
    small = truncate_kernel(HALF_LINE, range(0, 12))
    big = truncate_kernel(HALF_LINE, range(0, 60))
    ts = killing.exact_pn(small, 4, 40)
    tb = killing.exact_pn(big, 4, 40)
    for n in (5, 10, 20, 40):
        assert ts.at(n, 2) <= tb.at(n, 2) + 1e-15
        assert tb.at(n, 2) <= ts.at(n, 2) + ts.leak[n] + 1e-15
    assert np.all(tb.leak[:41] <= 1e-12)  # big window airtight at this horizon


def test_exact_pn_window_tol():
    kern = truncate_kernel(HALF_LINE, range(0, 6))
    with pytest.raises(WindowTooSmall):
        killing.exact_pn(kern, 4, 50, tol=1e-6)


def test_pn_to_target_reversibility():
    ch = constant_drift_chain(0.25)
    kern = truncate_kernel(ch, range(0, 40))
    frm0 = killing.exact_pn(kern, 0, 20)
    frm7 = killing.exact_pn(kern, 7, 20)
    # p_n(7, 0) from the source-0 row must match direct iteration from 7
    back = killing.pn_to_target(frm0, 7)
    assert np.allclose(back, frm7.p[:, 0], rtol=1e-12, atol=1e-300)


# --- ratio lemma ---------------------------------------------------------------

def test_ratio_identity_case():
    kern = truncate_kernel(HALF_LINE, range(0, 80))
    rc = killing.ratio_lemma_check(HALF_LINE, kern, 10, 4, 4, 500,
                                   kappa=lambda u: 0.25, master_seed=4)
    assert rc.estimate == pytest.approx(1.0, abs=1e-12)


def test_ratio_no_killing_below_one():
    kern = truncate_kernel(HALF_LINE, range(0, 80))
    rc = killing.ratio_lemma_check(HALF_LINE, kern, 10, 6, 4, 20000,
                                   kappa=None, master_seed=3)
    assert rc.estimate <= 1.0 + 3 * rc.sigma
    assert rc.sharper_bound == pytest.approx(1.0)


def test_ratio_killed_below_two(gamma3):
    prof, knet = gamma3
    kern = truncate_kernel(knet, range(0, 80))
    rc = killing.ratio_lemma_check(knet, kern, 10, 4, 2, 20000,
                                   kappa=lambda u: 0.25, master_seed=5)
    assert rc.passed
    assert rc.estimate <= rc.sharper_bound + 3 * rc.sigma


# --- SPD and the killed envelope ------------------------------------------------

@pytest.fixture(scope="module")
def killed_kernel(gamma3):
    _, knet = gamma3
    return truncate_kernel(knet, range(0, 400))


def test_spd_trend_gamma3(killed_kernel):
    grid = np.unique(np.geomspace(8, 2000, 32).astype(int))
    rep = killing.spd_classify(killed_kernel, 0, grid)
    assert rep.spd_trend
    assert np.all(np.diff(rep.window_slopes) < 0)


def test_spd_flat_for_unkilled_half_line():
    kern = truncate_kernel(HALF_LINE, range(0, 400))
    grid = np.unique(np.geomspace(8, 2000, 32).astype(int))
    rep = killing.spd_classify(kern, 0, grid)
    assert not rep.spd_trend
    # reflected-walk envelope decays like n^{-1/2}
    assert rep.window_slopes[-1] == pytest.approx(-0.5, abs=0.05)


def test_combbound_envelope_domination(killed_kernel, gamma3):
    _, knet = gamma3
    grid = np.unique(np.geomspace(8, 2000, 32).astype(int))
    fit = killing.combbound_check(killed_kernel, knet, 0, 3.0, grid)
    assert fit.passed
    assert fit.c_dominating > 0
    assert np.max(fit.residuals) <= 1e-12


# --- survival statistics ---------------------------------------------------------

def test_survival_ballistic_bounded_away(gamma3):
    prof, _ = gamma3
    path = list(range(20001))
    half = killing.survival_and_superdiffusivity(path[:10001], prof.kappa,
                                                 lambda x: x, r=2.0)
    full = killing.survival_and_superdiffusivity(path, prof.kappa,
                                                 lambda x: x, r=2.0)
    assert full.survival_prob > 1e-4
    assert full.survival_prob >= 0.9 * half.survival_prob
    assert full.superdiff_stat > 0.0


def test_survival_diffusive_vanishes(gamma3):
    prof, _ = gamma3
    from cutlab.chains import bd_from_drifts

    walk = simulate.run_bd(bd_from_drifts(lambda i: 0.0, 4), 20000, 1, 3)
    st = killing.survival_and_superdiffusivity(walk.states.tolist(),
                                               prof.kappa, lambda x: x, r=2.0)
    assert st.survival_prob < 1e-8


def test_survival_zero_kappa_is_one():
    st = killing.survival_and_superdiffusivity(list(range(100)),
                                               lambda u: 0.0, lambda x: x)
    assert st.survival_prob == 1.0
