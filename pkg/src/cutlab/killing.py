"""Spatially-dependent killing, Varopoulos-Carne certification, and exact p_n.

The killing profile routes mass to the graveyard at rate
K(x) = c(x) min{1, <x>^{-2} (log <x>)^gamma} with <x> = 2 v d(o, x), the
marginal decay under which the killed network keeps superpolynomial decay of
transition probabilities (gamma > 2) while a superdiffusive walk still
survives with positive conditional probability (gamma + 1 < 2r).

Exact n-step probabilities come from row iteration of a truncated
substochastic kernel; the accumulated leak is a one-sided error bound on
every p_n.  The Varopoulos-Carne bound is used with the spectral-radius
factor fixed at 1, which only weakens it.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .chains import KilledNetwork, TruncatedKernel
from .errors import WindowTooSmall
from . import simulate


# ---------------------------------------------------------------------------
# stock networks
# ---------------------------------------------------------------------------

def half_line(conductance=1.0):
    """Lazily enumerated half-line 0-1-2-... with unit conductances."""
    c = float(conductance)

    def adjacency(u):
        if not isinstance(u, (int, np.integer)) or u < 0:
            from .errors import UnknownVertex

            raise UnknownVertex(f"{u!r} not on the half-line")
        if u == 0:
            return [(1, c)]
        return [(u - 1, c), (u + 1, c)]

    return KilledNetwork(adjacency, c_min=c, vertices=None, label="half_line")


def binary_tree(depth):
    """Finite binary tree of the given depth (heap-indexed vertices 1..2^(d+1)-1)."""
    n = 2 ** (depth + 1) - 1
    adj = {}
    for u in range(1, n + 1):
        nbrs = []
        if u > 1:
            nbrs.append((u // 2, 1.0))
        for v in (2 * u, 2 * u + 1):
            if v <= n:
                nbrs.append((v, 1.0))
        adj[u] = nbrs
    return KilledNetwork(adj, label=f"binary_tree(depth={depth})")


def grid_patch(width, height):
    """Rectangular patch of the square lattice with unit conductances."""
    adj = {}
    for i in range(width):
        for j in range(height):
            nbrs = []
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < width and 0 <= b < height:
                    nbrs.append(((a, b), 1.0))
            adj[(i, j)] = nbrs
    return KilledNetwork(adj, label=f"grid({width}x{height})")


def bfs_distances(net, source, limit=None):
    """Breadth-first distances from a source over a finite network."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if limit is not None and dist[u] >= limit:
            continue
        for v, _ in net.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


class KillingProfile:
    """K(x) = c(x) min{1, <x>^{-2} (log <x>)^gamma} around an origin.

    Parameters
    ----------
    net : KilledNetwork
        The base network (its own killing is ignored).
    origin : vertex
    gamma : float
    dist : callable, optional
        d(origin, x); default is cached BFS (the half-line passes
        ``lambda x: x``).
    """

    def __init__(self, net, origin, gamma, dist=None):
        self.net = net
        self.origin = origin
        self.gamma = float(gamma)
        if dist is None:
            table = bfs_distances(net, origin)
            dist = table.__getitem__
        self._dist = dist

    def bracket(self, x):
        """<x> = 2 v d(o, x)."""
        return max(2.0, float(self._dist(x)))

    def rate_ratio(self, x):
        """K(x)/c(x) = min{1, <x>^{-2} (log <x>)^gamma}."""
        b = self.bracket(x)
        return min(1.0, b ** -2.0 * math.log(b) ** self.gamma)

    def K(self, x):
        return self.net.total_conductance(x) * self.rate_ratio(x)

    def kappa(self, x):
        """Per-step kill probability K(x)/(c(x)+K(x))."""
        r = self.rate_ratio(x)
        return r / (1.0 + r)

    def killed_network(self):
        """The base network equipped with this killing function."""
        return KilledNetwork(self.net._adj, killing=self.K,
                             c_min=self.net.c_min, vertices=self.net.vertices,
                             label=self.net.label + f"+kill(gamma={self.gamma})")


# ---------------------------------------------------------------------------
# Varopoulos-Carne
# ---------------------------------------------------------------------------

VC_PREFACTOR = 2.0


def vc_bound(net, x, y, n, dist=None, prefactor=VC_PREFACTOR):
    """Varopoulos-Carne bound: 2 sqrt(m(y)/m(x)) exp(-d(x,y)^2/(2n)) with rho = 1.

    ``m(u) = c(u) + K(u)`` is the vertex weight of the (possibly killed)
    network and the spectral-radius factor is fixed at 1.  The prefactor is
    Carne's classical constant 2: without it the inequality already fails
    between half-line neighbours (p_1 = 1 > sqrt(2) e^{-1/2}).  Disconnected
    pairs get bound 0 (the true p_n vanishes).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if dist is None:
        table = bfs_distances(net, x)
        if y not in table:
            return 0.0
        d = table[y]
    else:
        d = dist(x, y)
        if d is None or math.isinf(d):
            return 0.0
    ratio = net.out_mass(y) / net.out_mass(x)
    return prefactor * math.sqrt(ratio) * math.exp(-(d * d) / (2.0 * n))


# ---------------------------------------------------------------------------
# exact p_n by kernel iteration
# ---------------------------------------------------------------------------

@dataclass
class PnTable:
    """Row-iterated n-step probabilities from one source.

    ``p[n, j]`` is p_n(x, states[j]) computed within the window; the true
    probability lies in [p[n, j], p[n, j] + leak[n]] where ``leak[n]`` is the
    mass that left the window *alive* by step n (killed mass never returns,
    so it does not enter the one-sided truncation bound).
    """

    kernel: TruncatedKernel
    source: object
    p: np.ndarray
    leak: np.ndarray
    killed_mass: np.ndarray
    in_window_mass: np.ndarray

    def at(self, n, y):
        j = self.kernel.index.get(y)
        if j is None:
            raise WindowTooSmall(f"{y!r} outside the window")
        return float(self.p[n, j])

    def survival(self, n):
        """P(X_n != dagger), exact up to the alive-exit leak."""
        return float(self.in_window_mass[n] + self.leak[n])


def exact_pn(kernel, x, n_max, tol=None):
    """All p_n(x, .) for n = 0..n_max with accumulated leak bounds.

    Raises
    ------
    WindowTooSmall
        If ``tol`` is given and the accumulated alive-exit leak exceeds it
        before ``n_max``.
    """
    j0 = kernel.index.get(x)
    if j0 is None:
        raise WindowTooSmall(f"source {x!r} outside the window")
    nstates = len(kernel)
    p = np.zeros((n_max + 1, nstates))
    p[0, j0] = 1.0
    leak = np.zeros(n_max + 1)
    killed = np.zeros(n_max + 1)
    mass = np.ones(n_max + 1)
    mat = kernel.matrix
    lk_exit = kernel.leak_exit
    lk_kill = kernel.leak_kill
    v = p[0]
    acc = 0.0
    acc_kill = 0.0
    for n in range(1, n_max + 1):
        acc += float(v @ lk_exit)
        acc_kill += float(v @ lk_kill)
        v = v @ mat
        p[n] = v
        leak[n] = acc
        killed[n] = acc_kill
        mass[n] = float(v.sum())
        if tol is not None and acc > tol:
            raise WindowTooSmall(
                f"accumulated leak {acc:.3e} exceeds tol {tol} at step {n}")
    return PnTable(kernel=kernel, source=x, p=p, leak=leak, killed_mass=killed,
                   in_window_mass=mass)


def pn_to_target(table, y):
    """p_n(x -> y) for all n, converted via reversibility from the source row.

    log p_n(z, y_src) = log p_n(y_src, z) + log w(y_src) - log w(z): here we
    return p_n(y, source) for the table iterated from ``source``.
    """
    kern = table.kernel
    j = kern.index.get(y)
    if j is None:
        raise WindowTooSmall(f"{y!r} outside the window")
    if kern.log_weights is None:
        raise ValueError("kernel carries no reversibility weights")
    jsrc = kern.index[table.source]
    scale = math.exp(kern.log_weights[jsrc] - kern.log_weights[j])
    return table.p[:, j] * scale


VC_CSV_HEADER = "n,x,y,p_n,vc_bound,violation"


@dataclass
class VcAudit:
    """Grid check of p_n <= vc_bound with leak accounted."""

    label: str
    n_triples: int
    violations: int
    max_margin: float  # max of (p_n + leak) - bound over the grid
    rows: list = field(default_factory=list, repr=False)

    @property
    def passed(self):
        return self.violations == 0


def vc_audit(net, kernel, sources, targets, n_list, dist=None,
             collect_rows=False):
    """Check p_n(x, y) + leak <= vc_bound(x, y, n) over a grid of triples.

    Windows should be sized so the walk cannot leave them within max(n_list)
    steps from any source (then the leak term is exactly zero and the check
    is exact).
    """
    n_max = max(n_list)
    dists = {}
    rows = []
    violations = 0
    max_margin = -math.inf
    n_triples = 0
    for x in sources:
        table = exact_pn(kernel, x, n_max)
        if dist is None:
            dists[x] = bfs_distances(net, x)
        for y in targets:
            for n in n_list:
                pv = table.at(n, y) + table.leak[n]
                if dist is None:
                    d = dists[x].get(y)
                    bound = (0.0 if d is None else
                             VC_PREFACTOR *
                             math.sqrt(net.out_mass(y) / net.out_mass(x)) *
                             math.exp(-(d * d) / (2.0 * n)))
                else:
                    bound = vc_bound(net, x, y, n, dist=dist)
                margin = pv - bound
                max_margin = max(max_margin, margin)
                bad = margin > 1e-12
                violations += bad
                n_triples += 1
                if collect_rows:
                    rows.append((n, x, y, pv, bound, int(bad)))
    return VcAudit(label=net.label, n_triples=n_triples,
                   violations=int(violations), max_margin=float(max_margin),
                   rows=rows)


def vc_rows_to_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(VC_CSV_HEADER + "\n")
        for n, x, y, p, b, bad in rows:
            fh.write(f"{n},{x},{y},{p!r},{b!r},{bad}\n")


# ---------------------------------------------------------------------------
# ratio lemma (expected p_m/p_n along the walk)
# ---------------------------------------------------------------------------

@dataclass
class RatioCheck:
    """Monte Carlo estimate of E[p_m(X_n, X_0)/p_n(X_n, X_0)]."""

    n: int
    m: int
    n_walks: int
    estimate: float
    sigma: float
    sharper_bound: float  # P(X_m != dagger) + P(X_n = dagger)

    @property
    def passed(self):
        return self.estimate <= 2.0 + 3.0 * self.sigma


def ratio_lemma_check(net, kernel, x0, n, m, n_walks, kappa=None,
                      master_seed=0):
    """Estimate E[p_m(X_n, X_0)/p_n(X_n, X_0)] with the ratio-1 convention at dagger.

    The ratio equals p_m(X_0, X_n)/p_n(X_0, X_n) by reversibility, evaluated
    from one exact row iteration.  Killed walks contribute 1.

    Raises
    ------
    WindowTooSmall
        If a surviving walk leaves the window (or lands where p_n vanishes).
    """
    table = exact_pn(kernel, x0, max(n, m))
    vals = np.empty(n_walks)
    killed_by_m = 0
    killed_by_n = 0
    for seed in range(n_walks):
        traj = simulate.run_killed(net, kappa, max(n, m), seed, master_seed,
                                   start=x0)
        alive = traj.states
        if traj.is_killed and traj.kill_time <= m:
            killed_by_m += 1
        if traj.is_killed and traj.kill_time <= n:
            killed_by_n += 1
            vals[seed] = 1.0
            continue
        z = alive[n]
        pn = table.at(n, z)
        if pn <= 0.0:
            raise WindowTooSmall(f"p_n(x0, {z!r}) = 0 within the window")
        vals[seed] = table.at(m, z) / pn
    est = float(vals.mean())
    sig = float(vals.std(ddof=1) / math.sqrt(n_walks))
    sharper = (1.0 - killed_by_m / n_walks) + killed_by_n / n_walks
    return RatioCheck(n=n, m=m, n_walks=n_walks, estimate=est, sigma=sig,
                      sharper_bound=float(sharper))


# ---------------------------------------------------------------------------
# superpolynomial decay classification and the killed-envelope fit
# ---------------------------------------------------------------------------

@dataclass
class SPDReport:
    """Trend classification of sup-source transition decay (never a certificate)."""

    n_grid: np.ndarray
    log_envelope: np.ndarray
    window_slopes: np.ndarray
    spd_trend: bool


def _sup_source_envelope(kernel, origin, n_grid):
    """sup_x p_n(x, origin) for n in the grid, via reversibility from one row."""
    if kernel.log_weights is None:
        raise ValueError("kernel carries no reversibility weights")
    n_max = int(max(n_grid))
    j0 = kernel.index.get(origin)
    if j0 is None:
        raise WindowTooSmall("origin outside the window")
    grid = set(int(n) for n in n_grid)
    v = np.zeros(len(kernel))
    v[j0] = 1.0
    log_w = kernel.log_weights
    shift = log_w[j0] - log_w
    mat = kernel.matrix
    env = {}
    for n in range(1, n_max + 1):
        v = v @ mat
        if n in grid:
            with np.errstate(divide="ignore"):
                env[n] = float(np.max(np.log(v) + shift))
    return np.array([env[int(n)] for n in n_grid])


def spd_classify(kernel, origin, n_grid, windows=4, steepen=1.15):
    """Fit log sup_x p_n(x, o) against log n over sliding windows.

    The superpolynomial-decay trend holds when the windowed slopes steepen
    monotonically and the last is at least ``steepen`` times the first (a
    power law keeps a flat slope).
    """
    n_grid = np.asarray(sorted(n_grid), dtype=np.int64)
    log_env = _sup_source_envelope(kernel, origin, n_grid)
    keep = np.isfinite(log_env)
    xs = np.log(n_grid[keep].astype(np.float64))
    ys = log_env[keep]
    bounds = np.linspace(0, xs.size, windows + 1).astype(int)
    slopes = []
    for w in range(windows):
        sl = slice(bounds[w], bounds[w + 1])
        if sl.stop - sl.start >= 2:
            slopes.append(np.polyfit(xs[sl], ys[sl], 1)[0])
    slopes = np.asarray(slopes)
    trend = bool(slopes.size >= 2 and np.all(np.diff(slopes) < 0)
                 and slopes[-1] <= steepen * slopes[0])
    return SPDReport(n_grid=n_grid, log_envelope=log_env,
                     window_slopes=slopes, spd_trend=trend)


@dataclass
class CombBoundFit:
    """Envelope-domination fit of log p_n <= log sqrt(8c(o)/c_min) - c (log n)^(gamma/2)."""

    gamma: float
    c_fit: float
    c_dominating: float
    residuals: np.ndarray

    @property
    def passed(self):
        return self.c_dominating > 0 and bool(np.all(self.residuals <= 1e-12))


def combbound_check(kernel, net, origin, gamma, n_grid):
    """Fit the killed-envelope constant and check envelope domination.

    The prefactor sqrt(8 c(o)/c_min) is fixed; the decay constant c is
    fitted by least squares on the upper envelope and shrunk (if needed) to
    the largest value the envelope dominates, so the pass criterion is a
    positive dominating c with all residuals <= 0.
    """
    n_grid = np.asarray(sorted(n_grid), dtype=np.int64)
    n_grid = n_grid[n_grid >= 2]
    log_env = _sup_source_envelope(kernel, origin, n_grid)
    keep = np.isfinite(log_env)
    log_const = 0.5 * math.log(8.0 * net.total_conductance(origin) / net.c_min)
    xs = np.log(n_grid[keep].astype(np.float64)) ** (gamma / 2.0)
    ys = log_const - log_env[keep]
    c_ls = float(np.dot(xs, ys) / np.dot(xs, xs))
    c_dom = float(np.min(ys / xs))
    c = min(c_ls, c_dom)
    residuals = log_env[keep] - (log_const - c * xs)
    return CombBoundFit(gamma=float(gamma), c_fit=c_ls, c_dominating=c_dom,
                        residuals=residuals)


# ---------------------------------------------------------------------------
# survival and superdiffusivity statistics
# ---------------------------------------------------------------------------

@dataclass
class SurvivalStats:
    """Conditional survival probability and the superdiffusivity statistic."""

    survival_prob: float
    log_survival: float
    superdiff_stat: float
    r: float
    n0: int


def survival_and_superdiffusivity(states, kappa_fn, dist_fn, r=2.0, n0=8):
    """Survival product prod(1 - kappa(X_i)) and min_n d(o,X_n)/(n^(1/2) (log n)^r).

    ``states`` is any realized path (X_0..X_T); the survival product is
    accumulated in log space over i = 0..T-1.
    """
    t = len(states) - 1
    log_s = 0.0
    for i in range(t):
        log_s += math.log1p(-kappa_fn(states[i]))
    stat = math.inf
    for n in range(max(2, n0), t + 1):
        denom = math.sqrt(n) * math.log(n) ** r
        stat = min(stat, dist_fn(states[n]) / denom)
    return SurvivalStats(survival_prob=math.exp(log_s), log_survival=log_s,
                         superdiff_stat=float(stat), r=float(r), n0=int(n0))
