"""Seeded trajectory simulation and certified cut-time detection.

Trajectories are deterministic functions of ``(chain, horizon, master_seed,
seed)``: uniforms come from the counter-based stream keyed by
``(master_seed, seed)``, so runs are reproducible, resumable, and
embarrassingly parallel across seeds.

A time n is a cut time when the visited sets {X_i : i <= n} and
{X_i : i > n} are disjoint.  For a birth-death path started at 0 the past
range is the interval [0, max_{i<=n} X_i], so n is a cut time iff X_n is the
running maximum and the infinite future stays strictly above it.  Within a
finite horizon the detector certifies a candidate against the unobserved
continuation with the exact hitting ratio H(X_T)/H(X_n): candidates are
certified greedily (earliest first, which is also smallest-residual first)
while the residual budget lasts, and the per-time residuals of the certified
set sum to the reported ``total_error`` (an upper bound on the expected
number of wrongly certified times).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from . import backend
from ._rng import kill_key, stream_key, u01_block
from .chains import BirthDeathChain, KilledNetwork
from .errors import InsufficientSamples, KappaOutOfRange, TableMismatch

INFINITY = math.inf


@dataclass
class Trajectory:
    """A realized path with seed provenance and optional killing time.

    ``states`` holds X_0..X_N where N = len-1 is the number of realized
    steps; for killed runs the states stop at the last live state and
    ``kill_time`` is the step at which the walk moved to the graveyard
    (INFINITY marker when it survived the horizon).  ``log_survival`` is
    log P(kill_time > horizon | path), recorded for the full unkilled path.
    """

    source: object
    states: object  # int32 ndarray for birth-death, list of vertices for networks
    seed: int
    master_seed: int
    horizon: int
    start: object = 0
    kill_time: float = INFINITY
    log_survival: float = 0.0

    @property
    def n_steps(self):
        return len(self.states) - 1

    @property
    def is_killed(self):
        return self.kill_time is not INFINITY and self.kill_time != INFINITY

    def running_max(self):
        return np.maximum.accumulate(np.asarray(self.states))

    def prefix(self, horizon):
        """View of the first ``horizon`` steps (shared seed stream)."""
        if horizon > self.n_steps:
            raise ValueError("prefix longer than realized path")
        return Trajectory(self.source, self.states[: horizon + 1], self.seed,
                          self.master_seed, horizon, self.start,
                          self.kill_time if (self.is_killed and self.kill_time <= horizon)
                          else INFINITY,
                          self.log_survival)

    def log_z(self, table):
        """log Z_n = log H(X_n) along the path (birth-death only)."""
        states = np.asarray(self.states)
        if int(states.max()) > table.up_to:
            raise TableMismatch("table shorter than the path's running maximum")
        return table.log_h[states]


def run_bd(chain, horizon, seed, master_seed=0, start=0, stop_level=-1):
    """Simulate a birth-death path; deterministic given (chain, horizon, seeds).

    The walk steps up from state i with probability E_i (E_0 = 1).  When
    ``stop_level`` is nonnegative the run ends early upon reaching it.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    key = stream_key(master_seed, seed)
    out = np.empty(horizon + 1, dtype=np.int32)
    out[0] = start
    n_done = 0
    x = int(start)
    cap = max(1024, x + 2)
    while True:
        e = chain.e_array(cap)
        n, reason = backend.bd_path(e, x, horizon - n_done, key, n_done,
                                    stop_level, out[n_done:])
        n_done += n
        x = int(out[n_done])
        if reason == 2:
            cap *= 2
            continue
        break
    return Trajectory(chain, out[: n_done + 1], seed, master_seed, horizon, start)


def _kappa_values(source, kappa, states):
    if isinstance(source, KilledNetwork) and kappa is None:
        vals = np.array([source.killing(u) / source.out_mass(u) for u in states])
    elif callable(kappa):
        if isinstance(states, np.ndarray):
            vals = np.broadcast_to(
                np.asarray(kappa(states), dtype=np.float64), states.shape).copy()
        else:
            vals = np.array([float(kappa(u)) for u in states])
    else:
        raise ValueError("need a kappa callable or a KilledNetwork")
    if np.any(vals < 0.0) or np.any(vals >= 1.0):
        raise KappaOutOfRange("per-step kill probability must lie in [0, 1)")
    return vals


def run_killed(source, kappa, horizon, seed, master_seed=0, start=0):
    """Simulate with killing: unkilled path first, then the conditional kill time.

    Given the path, P(kill at step n) = kappa(X_{n-1}) prod_{i<n-1}
    (1 - kappa(X_i)); for a KilledNetwork the per-step kill probability is
    K(u)/(c(u)+K(u)) and ``kappa`` may be None.

    Raises
    ------
    KappaOutOfRange
        If any visited state has kappa outside [0, 1).
    """
    key = stream_key(master_seed, seed)
    if isinstance(source, BirthDeathChain):
        traj = run_bd(source, horizon, seed, master_seed, start)
        states = traj.states
    elif isinstance(source, KilledNetwork):
        u = start
        states = [u]
        us = u01_block(key, 0, horizon)
        for i in range(horizon):
            targets, cum = source.step_distribution_unkilled(u)
            u = targets[int(np.searchsorted(cum, us[i], side="right"))]
            states.append(u)
    else:
        raise ValueError(f"cannot simulate {type(source).__name__}")

    kv = _kappa_values(source, kappa, states[:-1] if isinstance(states, np.ndarray)
                       else states[:-1])
    log_survival = float(np.sum(np.log1p(-kv)))
    vs = u01_block(kill_key(key), 0, len(kv))
    hits = np.nonzero(vs < kv)[0]
    if hits.size:
        tau = int(hits[0]) + 1  # killed at step tau, last live state X_{tau-1}
        live = states[:tau]
        return Trajectory(source, live, seed, master_seed, horizon, start,
                          kill_time=tau, log_survival=log_survival)
    return Trajectory(source, states, seed, master_seed, horizon, start,
                      kill_time=INFINITY, log_survival=log_survival)


@dataclass
class CutTimeReport:
    """Certified and candidate cut times of one finite-horizon trajectory.

    ``certified`` times carry per-time residual bounds whose sum is
    ``total_error``; ``candidates`` are times that satisfy the finite-horizon
    disjointness check but were not certified within the budget.  ``density``
    counts certified times in [0, horizon - tail_window] divided by that
    window length.
    """

    horizon: int
    certified: np.ndarray
    certified_levels: np.ndarray
    residuals: np.ndarray
    candidates: np.ndarray
    total_error: float
    tail_window: int
    density: float
    eps: float = math.nan

    @property
    def certified_count(self):
        return int(self.certified.size)

    @property
    def candidate_count(self):
        return int(self.candidates.size)

    def csv_row(self, seed):
        return (f"{seed},{self.horizon},{self.certified_count},"
                f"{self.candidate_count},{self.density!r},{self.total_error!r}")


CSV_HEADER = "seed,horizon,certified_cuts,candidates,density,total_error"

TRAJ_MAGIC = b"CUTTRAJ1"


def dump_trajectory(traj, path):
    """Binary trajectory dump: magic ``CUTTRAJ1``, then little-endian int32 states."""
    states = np.asarray(traj.states, dtype="<i4")
    with open(path, "wb") as fh:
        fh.write(TRAJ_MAGIC)
        fh.write(np.int64(states.size).astype("<i8").tobytes())
        fh.write(states.tobytes())


def load_trajectory_states(path):
    """States from a binary trajectory dump."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != TRAJ_MAGIC:
            raise ValueError(f"bad trajectory magic {magic!r}")
        n = int(np.frombuffer(fh.read(8), dtype="<i8")[0])
        return np.frombuffer(fh.read(4 * n), dtype="<i4").astype(np.int32)


def finite_horizon_cut_times(states):
    """Times n < N whose observed past and future visited sets are disjoint.

    Linear-time membership scan: n qualifies iff no state seen by time n
    occurs again after n, i.e. the prefix maximum of last-occurrence indices
    is at most n.
    """
    if isinstance(states, np.ndarray):
        seq = states.tolist()
    else:
        seq = list(states)
    last = {}
    for i, s in enumerate(seq):
        last[s] = i
    out = []
    pref = -1
    for n, s in enumerate(seq[:-1]):
        pref = max(pref, last[s])
        if pref <= n:
            out.append(n)
    return np.asarray(out, dtype=np.int64)


def detect_cut_times_bd(traj, table, eps=0.05, tail_window=None):
    """Certified cut-time detection for a birth-death trajectory.

    A time n is certified when (a) X_n equals the running maximum, (b) the
    observed future stays strictly above X_n, and (c) the exact probability
    H(X_T)/H(X_n) that the unobserved continuation ever returns to level X_n
    fits in the remaining residual budget.  Budgets are spent earliest-first
    and sum to at most ``eps``.

    Raises
    ------
    TableMismatch
        If the table does not belong to the trajectory's chain or is too
        short for the path.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if table.chain is not traj.source:
        raise TableMismatch("table was built for a different chain")
    s = np.asarray(traj.states)
    t = s.size - 1
    if t < 1:
        raise ValueError("empty trajectory")
    if int(s.max()) > table.up_to:
        raise TableMismatch("table shorter than the path's running maximum")
    run_max = np.maximum.accumulate(s)
    suf_min = np.minimum.accumulate(s[::-1])[::-1]
    cand = np.nonzero((s[:t] == run_max[:t]) & (suf_min[1:] > s[:t]))[0]
    levels = s[cand]
    resid = np.exp(table.log_h[s[t]] - table.log_h[levels])
    csum = np.cumsum(resid)
    n_cert = int(np.searchsorted(csum, eps, side="right"))
    certified = cand[:n_cert]
    if tail_window is None:
        tail_window = int(math.isqrt(t))
    span = max(t - tail_window, 1)
    density = float(np.count_nonzero(certified <= span) / span)
    return CutTimeReport(
        horizon=t,
        certified=certified.astype(np.int64),
        certified_levels=levels[:n_cert].astype(np.int64),
        residuals=resid[:n_cert],
        candidates=cand[n_cert:].astype(np.int64),
        total_error=float(csum[n_cert - 1]) if n_cert else 0.0,
        tail_window=tail_window,
        density=density,
        eps=eps,
    )


def detect_cut_times_generic(traj, tail_window=None):
    """Horizon-limited cut detection for arbitrary trajectories.

    Disjointness is evaluated over the observed path only; every qualifying
    time is reported as a candidate (no certification, since no exact
    hitting probabilities are available), and the density is taken over
    [0, T - tail_window].
    """
    states = traj.states
    t = len(states) - 1
    cand = finite_horizon_cut_times(states)
    if tail_window is None:
        tail_window = int(math.isqrt(max(t, 1)))
    span = max(t - tail_window, 1)
    density = float(np.count_nonzero(cand <= span) / span)
    return CutTimeReport(
        horizon=t,
        certified=np.empty(0, dtype=np.int64),
        certified_levels=np.empty(0, dtype=np.int64),
        residuals=np.empty(0),
        candidates=cand,
        total_error=0.0,
        tail_window=tail_window,
        density=density,
    )


def visit_counts(traj, m):
    """Total number of visits to state m along the realized path."""
    states = traj.states
    if isinstance(states, np.ndarray):
        return backend.visit_count(states, len(states) - 1, int(m))
    return sum(1 for s in states if s == m)


def sample_visit_counts(chain, m, n_seeds, master_seed=0, stop_offset=64,
                        horizon_cap=10 ** 7):
    """Independent samples of the total visit count H_m, with escape certified.

    Each seed runs until the walk reaches ``m + stop_offset``; the
    probability of any later return to m is the hitting ratio at the stop
    level, reported as ``residual`` (one-sided undercount bound per sample).
    """
    stop = int(m + stop_offset)
    counts = np.empty(n_seeds, dtype=np.int64)
    for seed in range(n_seeds):
        traj = run_bd(chain, horizon_cap, seed, master_seed, stop_level=stop)
        if traj.states[-1] != stop:
            raise InsufficientSamples(
                f"seed {seed} did not reach stop level {stop} within the cap")
        counts[seed] = visit_counts(traj, m)
    return counts


@dataclass
class GeometricFit:
    """Kolmogorov-Smirnov comparison against Geometric(1/mu) on {1, 2, ...}."""

    n: int
    mu: float
    ks_stat: float
    p_value: float
    passed: bool
    sample_mean: float


def geometric_fit(samples, mu, alpha=0.01):
    """KS distance between empirical visit counts and Geometric(1/mu).

    The success parameter is 1/mu, so P(H = j) = (1/mu)(1 - 1/mu)^(j-1).
    The p-value uses the asymptotic Kolmogorov distribution (conservative
    for discrete laws); pass iff p > alpha.

    Raises
    ------
    InsufficientSamples
        With fewer than 100 samples.
    """
    samples = np.asarray(samples)
    n = samples.size
    if n < 100:
        raise InsufficientSamples(f"need >= 100 samples, got {n}")
    if mu < 1.0:
        raise ValueError("mu must be >= 1")
    kmax = int(samples.max())
    counts = np.bincount(samples, minlength=kmax + 1)[1:]
    emp_cdf = np.cumsum(counts) / n
    k = np.arange(1, kmax + 1, dtype=np.float64)
    geo_cdf = -np.expm1(k * math.log1p(-1.0 / mu)) if mu > 1.0 else np.ones_like(k)
    d = float(np.max(np.abs(emp_cdf - geo_cdf)))
    p = float(kolmogorov(math.sqrt(n) * d))
    return GeometricFit(n=n, mu=float(mu), ks_stat=d, p_value=p,
                        passed=p > alpha, sample_mean=float(samples.mean()))
