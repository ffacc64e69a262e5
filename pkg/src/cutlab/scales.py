"""Drop decomposition of positive sequences across exponential scales.

Scale k covers the interval [e^{-k-1}, e^{-k}].  The decomposition of a
sequence tending to zero adjoins the running-minimum values inside the open
interval to the two endpoints; consecutive pairs are the drops, whose ratios
multiply to e^{-1} across the scale.  All values are handled in log space so
hitting-probability sequences that underflow floats decompose exactly.

A drop is *large* on scale k when its ratio is at most
Psi(k) = exp(-k/(2 psi^{-1}(k))) and its lower value is a realized minimum;
a large drop is a *permadrop* when the sequence never recovers to the drop's
upper value.  For birth-death hitting processes Z_n = H(X_n), never-recovery
past the horizon is certified with exact hitting ratios: recovery to level d
means returning to the largest position y with H(y) >= d, which the
continuation does with probability H(X_T)/H(y).  Per-path conditional
expectations built from these ratios make the Monte Carlo estimators of
E[R_k] and P(R_k >= 1) unbiased even at moderate stop depths.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (InsufficientSamples, NonPositiveEntry, ScaleMissing,
                     SequenceDoesNotReach)
from . import simulate

GOOD_TOL = 1e-12


def running_minima(z):
    """z*_n = min_{m<=n} z_m for a positive sequence.

    Raises
    ------
    NonPositiveEntry
        If any entry is not strictly positive.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise NonPositiveEntry("sequence must be strictly positive")
    return np.minimum.accumulate(z)


@dataclass
class Scale:
    """One populated scale of a drop decomposition (log domain).

    ``log_d`` holds log d_0 = -k > ... > log d_N = -(k+1); ``first_hit[i]``
    is the first index at which the sequence realizes d_i (-1 when d_i is an
    endpoint the sequence never equals).
    """

    k: int
    log_d: np.ndarray
    first_hit: np.ndarray

    @property
    def n_drops(self):
        return self.log_d.size - 1

    @property
    def log_ratios(self):
        return np.diff(self.log_d)

    def realized(self, i):
        return self.first_hit[i] >= 0


@dataclass
class DropDecomposition:
    """Per-scale drop sets of one sequence, scales k0..deepest fully crossed."""

    k0: int
    scales: dict
    source_id: str = ""

    def scale(self, k):
        if k not in self.scales:
            raise ScaleMissing(f"scale {k} not populated (have "
                               f"{sorted(self.scales)})")
        return self.scales[k]

    @property
    def ks(self):
        return sorted(self.scales)


def decompose(z=None, log_z=None, k_max=None, source_id=""):
    """Decompose a positive sequence tending to zero into per-scale drops.

    Parameters
    ----------
    z, log_z : array-like
        The sequence (give exactly one; ``log_z`` for values that underflow).
    k_max : int, optional
        Deepest requested scale; default is every fully crossed scale.

    Raises
    ------
    SequenceDoesNotReach
        If the sequence never falls below the floor of a requested scale.
    NonPositiveEntry
    """
    if (z is None) == (log_z is None):
        raise ValueError("give exactly one of z, log_z")
    if z is not None:
        z = np.asarray(z, dtype=np.float64)
        if np.any(z <= 0):
            raise NonPositiveEntry("sequence must be strictly positive")
        log_z = np.log(z)
    else:
        log_z = np.asarray(log_z, dtype=np.float64)
    if log_z.size < 1:
        raise ValueError("empty sequence")

    k0 = max(0, math.ceil(-2.0 * log_z[0]))
    mins = np.minimum.accumulate(log_z)
    deepest = float(mins[-1])
    k_deep = math.floor(-deepest) - 1  # deepest k with min <= -(k+1)
    if k_max is not None and k_max > k_deep:
        raise SequenceDoesNotReach(
            f"sequence min e^{deepest:.3f} never enters scale {k_max}")
    k_hi = k_deep if k_max is None else k_max
    # record values: strictly decreasing running minima and their first hits
    is_record = np.empty(log_z.size, dtype=bool)
    is_record[0] = True
    is_record[1:] = mins[1:] < mins[:-1]
    rec_idx = np.nonzero(is_record)[0]
    rec_val = mins[rec_idx]  # strictly decreasing

    scales = {}
    for k in range(k0, k_hi + 1):
        top, bot = -float(k), -float(k + 1)
        inside = (rec_val < top) & (rec_val > bot)
        vals = rec_val[inside]
        hits = rec_idx[inside]
        log_d = np.concatenate([[top], vals, [bot]])
        first_hit = np.concatenate([[-1], hits, [-1]])
        # endpoints the sequence happens to realize exactly
        for j, endpoint in ((0, top), (log_d.size - 1, bot)):
            exact = np.nonzero(rec_val == endpoint)[0]
            if exact.size:
                first_hit[j] = rec_idx[exact[0]]
        scales[k] = Scale(k=k, log_d=log_d, first_hit=first_hit.astype(np.int64))
    return DropDecomposition(k0=k0, scales=scales, source_id=source_id)


@dataclass
class GoodReport:
    """psi-goodness of one scale: large-drop product against e^{-1/2}."""

    k: int
    good: bool
    log_threshold: float
    log_large_product: float
    log_small_product: float
    n_large: int


def psi_good(decomp, k, psi_inv):
    """Is the sequence psi-good on scale k?

    Good iff the product of drop ratios at most Psi(k) is itself at most
    e^{-1/2} (at least half the scale's decay comes from large drops).  A
    scale with no large drops has large-product 1 (empty product) and is not
    good.

    Raises
    ------
    ScaleMissing
    """
    sc = decomp.scale(k)
    log_psi = float(psi_inv.log_threshold(float(k)))
    ratios = sc.log_ratios
    large = ratios <= log_psi
    log_large = float(ratios[large].sum())
    return GoodReport(
        k=k,
        good=bool(log_large <= -0.5 + GOOD_TOL),
        log_threshold=log_psi,
        log_large_product=log_large,
        log_small_product=float(ratios[~large].sum()),
        n_large=int(np.count_nonzero(large)),
    )


def entered_deep_subscale(decomp, k):
    """Did the running minimum land in (e^{-k-1}, e^{-k-3/4}]?"""
    sc = decomp.scale(k)
    interior = sc.log_d[1:-1]
    hit = np.any((interior > -(k + 1.0)) & (interior <= -(k + 0.75)))
    if hit:
        return True
    # an exactly realized floor endpoint also qualifies
    return bool(sc.first_hit[-1] >= 0)


@dataclass
class PermadropReport:
    """Certified permadrop count of one scale of one trajectory.

    ``r_observed`` counts large drops with no recovery within the horizon;
    ``r_weighted`` subtracts each one's exact post-horizon recovery
    probability (unbiased for E[R_k]), ``any_weighted`` is the exact
    conditional P(R_k >= 1 | path), and ``r_certified`` counts observed
    permadrops whose residual is below ``certify_tol``.
    """

    k: int
    n_large: int
    r_observed: int
    r_certified: int
    r_weighted: float
    any_weighted: float
    residual_total: float
    residuals: np.ndarray = field(repr=False)


def permadrop_count(traj, table, decomp, k, psi_inv, certify_tol=1e-6):
    """Count large permadrops of Z = H(X) on scale k with certified residuals.

    A large drop (d_i, d_{i+1}) (ratio <= Psi(k), lower value realized) is a
    permadrop when Z stays strictly below d_i from the first hit of d_{i+1}
    onward.  Observed non-recoveries are certified against the unobserved
    continuation via the hitting ratio H(X_T)/H(y_i) onto the recovery
    position y_i = max{y : H(y) >= d_i}.
    """
    sc = decomp.scale(k)
    log_psi = float(psi_inv.log_threshold(float(k)))
    states = np.asarray(traj.states)
    log_z = table.log_h[states]
    suffix_max = np.maximum.accumulate(log_z[::-1])[::-1]
    log_h_end = float(log_z[-1])

    n_large = 0
    r_observed = 0
    r_certified = 0
    r_weighted = 0.0
    residuals = []
    recovery_positions = []
    ratios = sc.log_ratios
    for i in range(sc.n_drops):
        if ratios[i] > log_psi or sc.first_hit[i + 1] < 0:
            continue
        n_large += 1
        hit = int(sc.first_hit[i + 1])
        d_up = sc.log_d[i]
        if suffix_max[hit] >= d_up:
            continue  # recovered within horizon
        # recovery position: deepest state with log H >= d_up
        y = int(np.searchsorted(-table.log_h, -d_up, side="right")) - 1
        resid = math.exp(log_h_end - table.log_h[y])
        r_observed += 1
        r_weighted += 1.0 - resid
        residuals.append(resid)
        recovery_positions.append(y)
        if resid <= certify_tol:
            r_certified += 1
    if r_observed:
        # every alive drop recovers iff the walk returns to the lowest
        # recovery position, which forces all higher ones on the way
        y_min = min(recovery_positions)
        any_weighted = 1.0 - math.exp(log_h_end - table.log_h[y_min])
    else:
        any_weighted = 0.0
    return PermadropReport(
        k=k,
        n_large=n_large,
        r_observed=r_observed,
        r_certified=r_certified,
        r_weighted=r_weighted,
        any_weighted=any_weighted,
        residual_total=float(np.sum(residuals)) if residuals else 0.0,
        residuals=np.asarray(residuals),
    )


@dataclass
class ScaleAudit:
    """Aggregated per-scale audit row (one seed)."""

    k: int
    n_drops: int
    n_large: int
    r_observed: int
    psi_good: bool
    residual: float


SCALES_CSV_HEADER = "k,N_k,large_drops,R_k,psi_good,residual"


def audit_trajectory(traj, table, psi_inv, k_max=None, certify_tol=1e-6):
    """Full per-scale audit of one trajectory's hitting process."""
    log_z = traj.log_z(table)
    decomp = decompose(log_z=log_z, k_max=k_max, source_id=f"seed={traj.seed}")
    rows = []
    for k in decomp.ks:
        good = psi_good(decomp, k, psi_inv)
        perma = permadrop_count(traj, table, decomp, k, psi_inv, certify_tol)
        rows.append(ScaleAudit(k=k, n_drops=decomp.scale(k).n_drops,
                               n_large=perma.n_large,
                               r_observed=perma.r_observed,
                               psi_good=good.good,
                               residual=perma.residual_total))
    return decomp, rows


def audits_to_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(SCALES_CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.k},{r.n_drops},{r.n_large},{r.r_observed},"
                     f"{int(r.psi_good)},{r.residual!r}\n")


@dataclass
class ScaleStats:
    """Monte Carlo sandwich statistics for one scale."""

    k: int
    n_seeds: int
    e_r: float
    e_r_sigma: float
    p_good_deep: float
    p_good_deep_sigma: float
    p_any: float
    p_any_sigma: float
    lower_ok: bool
    lower_margin: float
    upper_ok: bool = True
    upper_margin: float = math.nan
    skipped: bool = False


@dataclass
class SandwichReport:
    """Per-scale sandwich check of the permadrop-count bounds.

    The lower bound is E[R_k] >= (1/4) P(good and deep-subscale) - 3 sigma;
    the upper is E[R_k] <= (2 + C log(2 psi^{-1}(k)/k)) P(R_k >= 1) + 3 sigma
    for the configured C.
    """

    chain_label: str
    scales: list
    c_hat: float
    c_used: float

    @property
    def all_lower_ok(self):
        return all(s.lower_ok for s in self.scales if not s.skipped)

    @property
    def all_upper_ok(self):
        return all(s.upper_ok for s in self.scales if not s.skipped)


def _upper_coefficient(k, psi_inv, c):
    log_arg = math.log(2.0) + float(psi_inv.log_psi_inv(float(k))) - math.log(k)
    return 2.0 + c * log_arg, log_arg


def sandwich_check(chain, table, psi_inv, scale_ks, n_seeds, master_seed=0,
                   stop_level=None, c_hat=None):
    """Monte Carlo check of the permadrop-count sandwich on the given scales.

    Each seed runs the chain until ``stop_level`` (default: twice the
    position where H crosses the floor of the deepest scale) and audits the
    hitting process.  Per-path conditional expectations (exact hitting
    ratios) make the estimators unbiased.  When ``c_hat`` is None the upper
    constant is fitted as the smallest nonnegative C making the bound hold
    on every scale (reported in ``c_hat``); ``c_used`` is what the upper
    check ran with.

    Raises
    ------
    InsufficientSamples
        If n_seeds < 1000.
    """
    if n_seeds < 1000:
        raise InsufficientSamples("sandwich_check needs n_seeds >= 1000")
    ks = sorted(scale_ks)
    if stop_level is None:
        floor = -(ks[-1] + 1.0)
        pos = int(np.searchsorted(-table.log_h, -floor))
        stop_level = min(2 * pos + 8, table.up_to)
    r_w = {k: np.zeros(n_seeds) for k in ks}
    gd = {k: np.zeros(n_seeds) for k in ks}
    anyw = {k: np.zeros(n_seeds) for k in ks}
    seen = {k: 0 for k in ks}
    for seed in range(n_seeds):
        traj = simulate.run_bd(chain, 10 ** 8, seed, master_seed,
                               stop_level=stop_level)
        log_z = table.log_h[np.asarray(traj.states)]
        decomp = decompose(log_z=log_z)
        for k in ks:
            if k not in decomp.scales:
                continue
            seen[k] += 1
            perma = permadrop_count(traj, table, decomp, k, psi_inv)
            good = psi_good(decomp, k, psi_inv).good
            deep = entered_deep_subscale(decomp, k)
            r_w[k][seed] = perma.r_weighted
            gd[k][seed] = 1.0 if (good and deep) else 0.0
            anyw[k][seed] = perma.any_weighted

    out = []
    ratios = []
    for k in ks:
        if seen[k] < n_seeds:
            out.append(ScaleStats(k=k, n_seeds=seen[k], e_r=math.nan,
                                  e_r_sigma=math.nan, p_good_deep=math.nan,
                                  p_good_deep_sigma=math.nan, p_any=math.nan,
                                  p_any_sigma=math.nan, lower_ok=True,
                                  lower_margin=math.nan, skipped=True))
            continue
        er = float(r_w[k].mean())
        er_s = float(r_w[k].std(ddof=1) / math.sqrt(n_seeds))
        pg = float(gd[k].mean())
        pg_s = float(gd[k].std(ddof=1) / math.sqrt(n_seeds))
        pa = float(anyw[k].mean())
        pa_s = float(anyw[k].std(ddof=1) / math.sqrt(n_seeds))
        lower_margin = er - 0.25 * pg + 3.0 * math.sqrt(er_s ** 2 + (0.25 * pg_s) ** 2)
        _, log_arg = _upper_coefficient(k, psi_inv, 0.0)
        if pa > 0:
            ratios.append((max(0.0, er / pa - 2.0), log_arg))
        out.append(ScaleStats(k=k, n_seeds=n_seeds, e_r=er, e_r_sigma=er_s,
                              p_good_deep=pg, p_good_deep_sigma=pg_s,
                              p_any=pa, p_any_sigma=pa_s,
                              lower_ok=bool(lower_margin >= 0.0),
                              lower_margin=float(lower_margin)))
    fitted = max((excess / log_arg for excess, log_arg in ratios), default=0.0)
    report = SandwichReport(chain_label=chain.label, scales=out,
                            c_hat=float(fitted), c_used=math.nan)
    apply_upper(report, psi_inv, fitted if c_hat is None else float(c_hat))
    return report


def apply_upper(report, psi_inv, c):
    """Re-evaluate the upper bound of an existing report with constant ``c``."""
    report.c_used = float(c)
    for s in report.scales:
        if s.skipped:
            continue
        coeff, _ = _upper_coefficient(s.k, psi_inv, c)
        bound = coeff * s.p_any + 3.0 * math.sqrt(s.e_r_sigma ** 2 +
                                                  (coeff * s.p_any_sigma) ** 2)
        s.upper_ok = bool(s.e_r <= bound)
        s.upper_margin = float(bound - s.e_r)
    return report


def c_hat_stable(c_a, c_b, tol=0.2, floor=1.0):
    """Stability of two fitted upper constants, relative with a floor.

    Fits at or near zero (conditional means below 2 on every scale) are
    treated as agreeing, since then any nonnegative C works.
    """
    return abs(c_a - c_b) <= tol * max(floor, c_a, c_b)


@dataclass
class NeverRecoveryProbe:
    """Optional-stopping check: P(drop (a,b) never recovers) = 1 - b/a."""

    level: int
    expected: float
    observed: float
    sigma: float
    n_seeds: int
    max_residual: float

    @property
    def passed(self):
        return abs(self.observed - self.expected) <= 3.0 * self.sigma


def never_recovery_probe(chain, table, level, n_seeds, master_seed=0,
                         stop_offset=48):
    """Estimate the never-recovery probability of the drop onto level+1.

    The observed drop is (a, b) = (H(level), H(level+1)), both realized
    minima of Z; never recovering to a means never returning to ``level``
    after first hitting level+1, with exact probability 1 - b/a.  Each seed
    runs until ``level + stop_offset``; unresolved recovery mass at the stop
    is the reported residual bound.
    """
    expected = -math.expm1(table.log_h[level + 1] - table.log_h[level])
    stop = level + stop_offset
    never = 0
    for seed in range(n_seeds):
        traj = simulate.run_bd(chain, 10 ** 7, seed, master_seed,
                               stop_level=stop)
        states = np.asarray(traj.states)
        hit = int(np.argmax(states == level + 1))
        recovered = bool(np.any(states[hit:] == level))
        if not recovered:
            never += 1
    observed = never / n_seeds
    sigma = math.sqrt(max(observed * (1.0 - observed), 1e-12) / n_seeds)
    max_residual = math.exp(table.log_h[stop] - table.log_h[level])
    return NeverRecoveryProbe(level=level, expected=float(expected),
                              observed=float(observed), sigma=float(sigma),
                              n_seeds=n_seeds, max_residual=float(max_residual))


@dataclass
class GoodFractionReport:
    """Fraction of psi-good scales among the audited schedule scales."""

    audited_scales: list
    fraction: float
    per_seed: np.ndarray

    @property
    def n_audited(self):
        return len(self.audited_scales)


def good_scale_fraction(chain, table, psi_inv, schedule, horizon, n_seeds,
                        master_seed=0):
    """Fraction of schedule scales a(r) that are psi-good, horizon-limited.

    Audits every scale a(r) the trajectory fully crosses within the horizon
    and averages the good fraction over seeds.
    """
    fractions = []
    audited_all = set()
    for seed in range(n_seeds):
        traj = simulate.run_bd(chain, horizon, seed, master_seed)
        log_z = table.log_h[np.asarray(traj.states)]
        decomp = decompose(log_z=log_z)
        if not decomp.ks:
            continue
        deepest = decomp.ks[-1]
        r = 1
        good = 0
        audited = 0
        while schedule.a(r) <= deepest:
            k = schedule.a(r)
            if k >= decomp.k0:
                audited += 1
                audited_all.add(k)
                if psi_good(decomp, k, psi_inv).good:
                    good += 1
            r += 1
        if audited:
            fractions.append(good / audited)
    per_seed = np.asarray(fractions)
    return GoodFractionReport(audited_scales=sorted(audited_all),
                              fraction=float(per_seed.mean()) if per_seed.size else 0.0,
                              per_seed=per_seed)
