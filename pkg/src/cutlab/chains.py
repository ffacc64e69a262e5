"""Core chain models: birth-death chains, networks with killing, truncated kernels.

Birth-death chains live on the nonnegative integers with up-probabilities
``E_i = 1/2 + p_i`` for ``i >= 1`` and ``E_0 = 1``.  Drifts are supplied as
pure functions of the index, validated on first evaluation and cached, so
chains defined by closed-form profiles can be queried at arbitrary depth.
"""

import math
import threading

import numpy as np
import scipy.sparse as sp

from .errors import DriftOutOfRange, EmptyWindow, UnknownVertex


class _Graveyard:
    """Absorbing graveyard state, distinct from every vertex."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "dagger"


GRAVEYARD = _Graveyard()


class BirthDeathChain:
    """Nearest-neighbour chain on {0, 1, 2, ...} with E_0 = 1.

    Parameters
    ----------
    drift : callable
        ``drift(i)`` returns p_i for integer ``i >= 1``; must accept numpy
        integer arrays when ``vectorized`` is true.
    validate_up_to : int
        Range over which drifts are validated eagerly; indices beyond are
        validated lazily on first evaluation.
    exact_log_h : callable, optional
        Closed-form ``log H(n)`` (hitting probability of 0 from n) for chains
        constructed from an explicit Green profile.  Consumed by the greens
        module as the exact table route.
    """

    def __init__(self, drift, validate_up_to=64, *, vectorized=False,
                 exact_log_h=None, label="bd"):
        self._drift = drift
        self._vectorized = vectorized
        self.exact_log_h = exact_log_h
        self.label = label
        self._lock = threading.Lock()
        self._e = np.ones(1)  # E_0 = 1 exactly
        if validate_up_to >= 1:
            self._extend(validate_up_to)

    def _compute_block(self, lo, hi):
        """p_i for i in [lo, hi), validated."""
        idx = np.arange(lo, hi, dtype=np.int64)
        if self._vectorized:
            p = np.asarray(self._drift(idx), dtype=np.float64)
        else:
            p = np.array([float(self._drift(int(i))) for i in idx])
        bad = ~((p > -0.5) & (p < 0.5))
        if bad.any():
            i = int(idx[bad][0])
            raise DriftOutOfRange(f"p_{i} = {p[bad][0]!r} not in (-1/2, 1/2)")
        return p

    def _extend(self, up_to):
        with self._lock:
            have = self._e.shape[0] - 1
            if up_to <= have:
                return
            p = self._compute_block(have + 1, up_to + 1)
            self._e = np.concatenate([self._e, 0.5 + p])

    def drift_at(self, i):
        """p_i for i >= 1 (cached)."""
        if i < 1:
            raise IndexError("drift defined for i >= 1")
        if i >= self._e.shape[0]:
            self._extend(max(i, 2 * (self._e.shape[0] - 1)))
        return float(self._e[i] - 0.5)

    def e_at(self, i):
        """Up-probability E_i (E_0 = 1)."""
        if i == 0:
            return 1.0
        return 0.5 + self.drift_at(i)

    def e_array(self, up_to):
        """E_0 .. E_up_to as a float64 array."""
        if up_to >= self._e.shape[0]:
            self._extend(up_to)
        return self._e[: up_to + 1]

    def e_block(self, lo, hi):
        """E_lo .. E_hi-1 without touching the cache (lo >= 1).

        Deep scans (hitting-ratio brackets) use this to keep memory O(chunk).
        """
        if lo < 1:
            raise IndexError("e_block needs lo >= 1")
        return 0.5 + self._compute_block(lo, hi)

    def __repr__(self):
        return f"BirthDeathChain({self.label})"


def bd_from_drifts(drift, validate_up_to=64, **kwargs):
    """Build a chain from a drift function, validating p_i on [1, validate_up_to].

    Raises
    ------
    DriftOutOfRange
        If any validated p_i falls outside the open interval (-1/2, 1/2);
        boundary values are rejected.
    """
    return BirthDeathChain(drift, validate_up_to, **kwargs)


def constant_drift_chain(p, **kwargs):
    """Chain with p_i = p for every i >= 1."""
    if not -0.5 < p < 0.5:
        raise DriftOutOfRange(f"p = {p!r} not in (-1/2, 1/2)")
    return BirthDeathChain(lambda i: np.full_like(np.asarray(i, dtype=np.float64), p),
                           validate_up_to=4, vectorized=True,
                           label=f"constant(p={p})")


def table_drift_chain(values, **kwargs):
    """Chain with tabulated p_1..p_N; the last entry repeats beyond the table."""
    tab = np.asarray(values, dtype=np.float64)
    if tab.size == 0:
        raise DriftOutOfRange("empty drift table")

    def drift(i):
        idx = np.minimum(np.asarray(i, dtype=np.int64) - 1, tab.size - 1)
        return tab[idx]

    return BirthDeathChain(drift, validate_up_to=int(tab.size),
                           vectorized=True, label=f"table(n={tab.size})")


def poly_green_chain(shift=2.0, power=1.0):
    """Chain whose Green function is exactly G(n) = (n + shift)^(-power).

    For ``power == 1`` the drift has the closed form p_n = 1/(2 (n + shift));
    otherwise it comes from second differences of G.  The exact log hitting
    probability is attached so tables can be built analytically.
    """
    if shift <= 0 or power <= 0:
        raise ValueError("shift and power must be positive")

    if power == 1.0:
        def drift(i):
            return 0.5 / (np.asarray(i, dtype=np.float64) + shift)
    else:
        def drift(i):
            n = np.asarray(i, dtype=np.float64)
            a = -power * np.log(n - 1 + shift)
            b = -power * np.log(n + shift)
            c = -power * np.log(n + 1 + shift)
            num = 1.0 + np.exp(c - a) - 2.0 * np.exp(b - a)
            den = 1.0 - np.exp(c - a)
            return 0.5 * num / den

    def exact_log_h(n):
        return -power * (np.log(np.asarray(n, dtype=np.float64) + shift) - math.log(shift))

    return BirthDeathChain(drift, validate_up_to=64, vectorized=True,
                           exact_log_h=exact_log_h,
                           label=f"poly_green(shift={shift},power={power})")


class KilledNetwork:
    """Network with conductances and a killing function.

    Transition rule: P(u,v) = c(u,v)/(c(u)+K(u)) and
    P(u, dagger) = K(u)/(c(u)+K(u)), rows summing to one exactly.

    Parameters
    ----------
    adjacency : dict or callable
        ``u -> list of (v, c_uv)`` with c_uv > 0.  A callable enables lazily
        enumerated (possibly infinite) networks.
    killing : callable
        ``u -> K(u) >= 0``.
    c_min : float, optional
        Declared infimum of vertex conductances; required for lazy networks
        (unverifiable globally), computed for finite ones.
    vertices : list, optional
        Finite vertex list; None for lazy networks.
    """

    def __init__(self, adjacency, killing=None, c_min=None, vertices=None, label="net"):
        self._adj = adjacency
        self._lazy = callable(adjacency)
        self.killing = killing if killing is not None else (lambda u: 0.0)
        self.vertices = vertices if vertices is not None else (
            None if self._lazy else list(adjacency.keys()))
        self.label = label
        if c_min is None:
            if self.vertices is None:
                raise ValueError("lazy networks need a declared c_min witness")
            c_min = min(self.total_conductance(u) for u in self.vertices)
        if c_min <= 0:
            raise ValueError("c_min must be positive")
        self.c_min = float(c_min)
        self._cum_cache = {}

    def neighbors(self, u):
        adj = self._adj(u) if self._lazy else self._adj.get(u)
        if adj is None:
            raise UnknownVertex(f"{u!r} is not a vertex")
        return adj

    def is_vertex(self, u):
        if u is GRAVEYARD:
            return False
        if self.vertices is not None:
            return u in set(self.vertices) if not isinstance(self.vertices, set) else u in self.vertices
        try:
            self.neighbors(u)
            return True
        except UnknownVertex:
            return False

    def total_conductance(self, u):
        return float(sum(c for _, c in self.neighbors(u)))

    def out_mass(self, u):
        """c(u) + K(u), the row normalizer (vertex weight for reversibility)."""
        return self.total_conductance(u) + float(self.killing(u))

    def step_distribution(self, u):
        """Cached (targets, cumulative probabilities) for sampling one step.

        The last target is the graveyard whenever K(u) > 0.
        """
        if u in self._cum_cache:
            return self._cum_cache[u]
        nbrs = self.neighbors(u)
        mass = self.out_mass(u)
        targets = [v for v, _ in nbrs]
        probs = [c / mass for _, c in nbrs]
        k = float(self.killing(u))
        if k > 0:
            targets.append(GRAVEYARD)
            probs.append(k / mass)
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        self._cum_cache[u] = (targets, cum)
        return targets, cum

    def step_distribution_unkilled(self, u):
        """Step distribution of the walk without killing (kill-time coupling)."""
        key = (u, "unkilled")
        if key in self._cum_cache:
            return self._cum_cache[key]
        nbrs = self.neighbors(u)
        c_u = self.total_conductance(u)
        targets = [v for v, _ in nbrs]
        cum = np.cumsum([c / c_u for _, c in nbrs])
        cum[-1] = 1.0
        self._cum_cache[key] = (targets, cum)
        return targets, cum


def network_transition(net, u, v):
    """Single transition probability P(u, v), with v a vertex or GRAVEYARD.

    Raises
    ------
    UnknownVertex
        If ``u`` is not a live vertex of ``net``.
    """
    nbrs = net.neighbors(u)
    mass = net.out_mass(u)
    if v is GRAVEYARD:
        return float(net.killing(u)) / mass
    return sum(c for w, c in nbrs if w == v) / mass


def log_bd_weights(chain, up_to):
    """log vertex weights of a birth-death chain's electrical representation.

    Edge conductances are w(i, i+1) = prod_{j<=i} E_j/(1-E_j) with w(0,1)=1;
    weights satisfy w(x) p(x,y) = w(y) p(y,x).  Used for reversibility
    conversions of n-step probabilities.
    """
    e = chain.e_array(up_to + 1)
    ratios = np.empty(up_to + 2)
    ratios[0] = 0.0  # log w(0,1) = 0
    with np.errstate(divide="ignore"):
        ratios[1:] = np.log(e[1: up_to + 2]) - np.log1p(-e[1: up_to + 2])
    log_edge = np.cumsum(ratios)  # log w(i, i+1), i = 0..up_to
    log_w = np.empty(up_to + 1)
    log_w[0] = 0.0
    log_w[1:] = np.logaddexp(log_edge[:up_to], log_edge[1: up_to + 1])
    return log_w


class TruncatedKernel:
    """Substochastic kernel on a finite state window.

    Attributes
    ----------
    states : list
        Window states in matrix order.
    matrix : scipy.sparse.csr_matrix
        Within-window transition weights.
    leak_exit : ndarray
        Per-row mass leaving the window alive (could re-enter; one-sided
        error source for windowed p_n).
    leak_kill : ndarray
        Per-row mass routed to the graveyard (never returns).
    log_weights : ndarray or None
        log reversibility weights of the window states, when the source is
        reversible (birth-death chain or network).
    """

    def __init__(self, states, matrix, leak_exit, leak_kill=None,
                 log_weights=None, label="kernel"):
        self.states = list(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.matrix = matrix.tocsr()
        self.leak_exit = np.asarray(leak_exit, dtype=np.float64)
        self.leak_kill = (np.zeros_like(self.leak_exit) if leak_kill is None
                          else np.asarray(leak_kill, dtype=np.float64))
        self.log_weights = log_weights
        self.label = label
        rowsum = (np.asarray(self.matrix.sum(axis=1)).ravel()
                  + self.leak_exit + self.leak_kill)
        if np.max(np.abs(rowsum - 1.0)) > 1e-12:
            raise ValueError("row sum + leak must equal 1")

    @property
    def leak(self):
        """Total per-row leak (window exit plus killing)."""
        return self.leak_exit + self.leak_kill

    def __len__(self):
        return len(self.states)


def truncate_kernel(source, window):
    """Restrict a chain or network to a finite window, recording leaks.

    For a birth-death chain the window must be a contiguous range starting
    at 0.  Transitions leaving the window (including killing) become leak.

    Raises
    ------
    EmptyWindow
        If the window contains no states.
    """
    states = list(window)
    if not states:
        raise EmptyWindow("empty truncation window")

    if isinstance(source, BirthDeathChain):
        if states != list(range(len(states))):
            raise ValueError("birth-death windows must be ranges [0, L]")
        L = len(states) - 1
        e = source.e_array(L)
        rows, cols, vals = [], [], []
        leak = np.zeros(L + 1)
        for i in range(L + 1):
            up = e[i]
            if i + 1 <= L:
                rows.append(i)
                cols.append(i + 1)
                vals.append(up)
            else:
                leak[i] += up
            if i >= 1:
                rows.append(i)
                cols.append(i - 1)
                vals.append(1.0 - up)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(L + 1, L + 1))
        log_w = log_bd_weights(source, L)
        return TruncatedKernel(states, mat, leak, log_weights=log_w,
                               label=source.label)

    net = source
    index = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    leak_exit = np.zeros(len(states))
    leak_kill = np.zeros(len(states))
    log_w = np.empty(len(states))
    for i, u in enumerate(states):
        mass = net.out_mass(u)
        log_w[i] = math.log(mass)
        leak_kill[i] += float(net.killing(u)) / mass
        for v, c in net.neighbors(u):
            j = index.get(v)
            if j is None:
                leak_exit[i] += c / mass
            else:
                rows.append(i)
                cols.append(j)
                vals.append(c / mass)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    return TruncatedKernel(states, mat, leak_exit, leak_kill, log_w,
                           label=net.label)


def from_spec(spec):
    """Build a chain from its JSON specification.

    Supported kinds::

        {"kind": "constant_drift", "p": 0.25}
        {"kind": "table", "values": [...]}
        {"kind": "poly_green", "shift": 2.0, "power": 1.0}
        {"kind": "greens_profile", "profile": "poly", "c": 1.0}
        {"kind": "sharpness", "profile": "sqrt_log", "M": 2}

    Profile-backed kinds are delegated to the construct module.
    """
    kind = spec.get("kind")
    if kind == "constant_drift":
        return constant_drift_chain(float(spec["p"]))
    if kind == "table":
        return table_drift_chain(spec["values"])
    if kind == "poly_green":
        return poly_green_chain(float(spec.get("shift", 2.0)),
                                float(spec.get("power", 1.0)))
    if kind == "greens_profile":
        from . import construct

        return construct.chain_from_profile(construct.profile_from_spec(spec))
    if kind == "sharpness":
        from . import construct

        profile = construct.profile_from_spec(spec)
        return construct.sharpness_chain(profile, up_to=int(spec.get("validate_up_to", 1024))).chain
    raise ValueError(f"unknown chain kind {kind!r}")
