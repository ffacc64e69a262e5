"""Exact Green-function, hitting-probability and D-series computation.

All quantities refer to visits to the origin 0.  The central objects are

* ``D(m) = 1 + sum_j prod_{i<=j} (1/E_{m+i} - 1)``, the series controlling
  single-level hitting probabilities,
* ``H(n)``, the probability of ever hitting 0 from n, with
  ``H(n, n-1) = 1 - 1/D(n-1)`` and ``H(n) = prod_k H(k, k-1)``,
* ``G(n) = G(0) H(n)`` with ``G(0) = D(0)`` (the first step from 0 is forced
  up, so the return probability is ``H(1,0)`` and ``1/(1-H(1,0)) = D(0)``).

Products of hitting ratios are accumulated as sums of logs, and tables expose
G and H in both linear and log form: G decays below 1e-300 on long horizons.

Writing ``sigma_j = prod_{i<=j} (1/E_i - 1)``, the series collapses to
``D(m) = sum_{j>=m} sigma_j / sigma_m``, which is evaluated for every m at
once by a suffix log-sum-exp.  The truncated tail is enclosed by the ratio
test: with ``r = max of the term ratios on a probe window past the cutoff``
(valid for chains whose ratios do not grow after the cutoff), the tail is at
most ``sigma_L r/(1-r)``.  The cutoff is increased geometrically until the
enclosure is tighter than the requested tolerance; chains that never certify
``r < 1`` raise instead of returning a wrong answer.  Chains built from an
explicit Green profile carry a closed-form ``log H`` and take the exact
route; ``d_window_sums`` provides uncertified finite-window lower bounds used
to validate that route by window-doubling.
"""

import math

import numpy as np

from .errors import NoTailBound, NotConvex, NotDecreasing, OutOfRange, SeriesDiverges

_RATIO_WINDOW = 16
_PROBE = 64


class GreensTable:
    """Exact table of G, H, D (and drifts) for a birth-death chain.

    Arrays are indexed by state n = 0..up_to.  ``log_g`` and ``log_h`` are
    always finite; the linear ``g``/``h`` properties underflow to 0 for deep
    states.
    """

    def __init__(self, chain, log_h, d, method):
        self.chain = chain
        self.up_to = len(log_h) - 1
        self.log_h = np.asarray(log_h, dtype=np.float64)
        self.d = np.asarray(d, dtype=np.float64)
        self.g0 = float(self.d[0])
        self.log_g = math.log(self.g0) + self.log_h
        self.method = method

    @property
    def h(self):
        return np.exp(self.log_h)

    @property
    def g(self):
        return np.exp(self.log_g)

    @property
    def e(self):
        return self.chain.e_array(self.up_to)

    def log_h_at(self, n):
        if not 0 <= n <= self.up_to:
            raise OutOfRange(f"state {n} outside table range [0, {self.up_to}]")
        return float(self.log_h[n])

    def hit_ratio(self, x, target):
        """P_x(ever hit ``target``) for target <= x, as exp(log H(x) - log H(target))."""
        if target > x:
            return 1.0
        return math.exp(self.log_h_at(x) - self.log_h_at(target))

    def dgrel_residuals(self):
        """Relative residual of D(n-1) against G(n-1)/(G(n-1)-G(n)), n = 1..up_to."""
        dg = 1.0 / -np.expm1(np.diff(self.log_g))
        return np.abs(self.d[:-1] - dg) / self.d[:-1]

    def check(self):
        """Basic table invariants: H(0)=1, positivity, strict decrease."""
        assert self.log_h[0] == 0.0
        assert np.all(np.diff(self.log_h) < 0), "H must be strictly decreasing"
        assert np.all(self.d >= 1.0)
        return True

    def to_csv(self, path):
        """Write the table with exact header ``n,G,H,D,p``."""
        e = self.e
        with open(path, "w") as fh:
            fh.write("n,G,H,D,p\n")
            for n in range(self.up_to + 1):
                p = e[n] - 0.5 if n >= 1 else 0.5
                fh.write(f"{n},{math.exp(self.log_g[n])!r},{math.exp(self.log_h[n])!r},"
                         f"{self.d[n]!r},{p!r}\n")


def d_series(chain, m, tol=1e-12, max_terms=10 ** 6):
    """Evaluate D(m) by direct summation with a certified geometric tail bound.

    Terms are accumulated in log space; summation stops once
    ``t_j/(1-r) < tol`` where ``r`` is the running max of the last few term
    ratios (a valid certificate when the ratios are eventually monotone, as
    for every stock chain here).

    Raises
    ------
    SeriesDiverges
        If partial sums blow up or terms fail to decay (recurrent chain).
    NoTailBound
        If no certified bound below ``tol`` is reached within ``max_terms``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    total = 1.0
    log_t = 0.0
    ratios = []
    prev_q = None
    for j in range(1, max_terms + 1):
        e_mj = chain.e_at(m + j)
        q = 1.0 / e_mj - 1.0
        log_t += math.log(q)
        if log_t > 60:
            raise SeriesDiverges(f"partial products exploding at term {j}")
        t = math.exp(log_t)
        total += t
        if total > 1e12:
            raise SeriesDiverges(f"partial sums exceed 1e12 at term {j}")
        if prev_q is not None:
            ratios.append(q)
            if len(ratios) > _RATIO_WINDOW:
                ratios.pop(0)
        prev_q = q
        if len(ratios) == _RATIO_WINDOW:
            r = max(ratios)
            if r < 1.0 and t / (1.0 - r) < tol:
                return total
    if ratios and max(ratios) >= 1.0 - 1e-9:
        raise SeriesDiverges("term ratios pinned at 1, series cannot converge")
    raise NoTailBound(f"no certified tail below tol={tol} within {max_terms} terms")


def _log_sigma(chain, length):
    """log sigma_j for j = 0..length, sigma_j = prod_{i<=j} (1/E_i - 1), sigma_0 = 1."""
    e = chain.e_array(length)
    logq = np.log1p(-e[1:]) - np.log(e[1:])
    return np.concatenate([[0.0], np.cumsum(logq)])


def _suffix_logsumexp(a):
    """b[m] = log sum_{j>=m} exp(a[j])."""
    return np.logaddexp.accumulate(a[::-1])[::-1]


def _certified_d(chain, up_to, tol, l_max):
    """Certified enclosure midpoint of D(0..up_to) via the sigma suffix sums."""
    L = up_to + 256
    while True:
        ls = _log_sigma(chain, L + _PROBE)
        q_probe = np.exp(np.diff(ls[L: L + _PROBE + 1]))
        r = float(np.max(q_probe))
        if r < 1.0:
            suffix = _suffix_logsumexp(ls[: L + 1])
            log_d_lo = suffix[: up_to + 1] - ls[: up_to + 1]
            log_tail = ls[L] + math.log(r) - math.log1p(-r)
            rel_gap = np.exp(log_tail - ls[: up_to + 1] - log_d_lo)
            if np.max(rel_gap) <= tol:
                d = np.exp(log_d_lo) * (1.0 + 0.5 * rel_gap)
                return d
        else:
            # ratios at or above 1: distinguish a recurrent plateau from a
            # not-yet-contracting stretch
            if ls[L + _PROBE] > ls[max(0, L // 2)] - 1.0 and L > 4 * (up_to + 256):
                raise SeriesDiverges(
                    "visit-series terms fail to decay; chain looks recurrent")
        if L >= l_max:
            raise NoTailBound(
                f"no certified tail ratio below 1 within depth {l_max}; "
                "chain may be recurrent or too slowly transient for the series route")
        L = min(l_max, 8 * L)


def d_window_sums(chain, up_to, window):
    """Finite-window lower bounds for D(0..up_to): sum_{j=m}^{window} sigma_j/sigma_m.

    No tail certificate is attached; these increase to the true values as the
    window grows and are used to validate exact-route tables by
    window-doubling.
    """
    ls = _log_sigma(chain, window)
    suffix = _suffix_logsumexp(ls)
    return np.exp(suffix[: up_to + 1] - ls[: up_to + 1])


def greens_from_d(chain, up_to, tol=1e-10, method="auto", l_max=2 ** 26):
    """Build the exact GreensTable of a transient birth-death chain.

    ``method`` is one of ``"auto"`` (exact closed form when the chain carries
    one, certified series otherwise), ``"series"``, or ``"exact"``.

    Raises
    ------
    SeriesDiverges, NoTailBound
        If transience cannot be certified at the requested tolerance.
    """
    if up_to < 1:
        raise ValueError("up_to must be >= 1")
    if method == "auto":
        method = "exact" if chain.exact_log_h is not None else "series"
    if method == "exact":
        if chain.exact_log_h is None:
            raise ValueError("chain has no exact log H; use method='series'")
        n = np.arange(up_to + 2, dtype=np.float64)
        log_h_ext = np.asarray(chain.exact_log_h(n), dtype=np.float64)
        if log_h_ext[0] != 0.0:
            log_h_ext = log_h_ext - log_h_ext[0]
        if np.any(np.diff(log_h_ext) >= 0):
            raise NotDecreasing("exact log H must be strictly decreasing")
        d = 1.0 / -np.expm1(np.diff(log_h_ext))
        return GreensTable(chain, log_h_ext[: up_to + 1], d, "exact")

    d = _certified_d(chain, up_to + 1, tol, l_max)
    # H(k, k-1) = 1 - 1/D(k-1); log H(n) accumulates the logs
    log_step = np.log1p(-1.0 / d[:up_to])
    log_h = np.concatenate([[0.0], np.cumsum(log_step)])
    return GreensTable(chain, log_h, d[: up_to + 1], "series")


def drift_from_greens(g, up_to, log=False):
    """Recover drifts from Green values via second differences.

    Parameters
    ----------
    g : array-like or callable
        G(0..up_to+1) (or log G when ``log`` is true).  Any positive multiple
        of the true Green function gives the same drifts.
    up_to : int
        Largest drift index returned; needs G up to index up_to+1.

    Returns
    -------
    ndarray
        p_n for n = 1..up_to.

    Raises
    ------
    NotDecreasing, NotConvex
        If the values are not strictly decreasing, or p_n would leave [0, 1/2).
    """
    if callable(g):
        vals = np.array([float(g(n)) for n in range(up_to + 2)])
    else:
        vals = np.asarray(g, dtype=np.float64)[: up_to + 2]
    if vals.shape[0] < up_to + 2:
        raise OutOfRange("need G values up to index up_to + 1")
    if not log:
        if np.any(vals <= 0):
            raise NotDecreasing("G must be positive")
        logv = np.log(vals)
    else:
        logv = vals
    if np.any(np.diff(logv) >= 0):
        raise NotDecreasing("G must be strictly decreasing")
    a = logv[:-2]
    b = logv[1:-1]
    c = logv[2:]
    num = 1.0 + np.exp(c - a) - 2.0 * np.exp(b - a)
    den = 1.0 - np.exp(c - a)
    p = 0.5 * num / den
    if np.any(p < -1e-12):
        n = int(np.argmax(p < -1e-12)) + 1
        raise NotConvex(f"second difference negative at n={n} (p_n={p[n - 1]:.3e})")
    return np.clip(p, 0.0, None)


def escape_mean(chain, table, m):
    """Mean of the total visit count to level m: mu_m = D(m)/E_m.

    The visit count is geometric on {1, 2, ...} with parameter 1/mu_m.
    """
    if not 0 <= m <= table.up_to:
        raise OutOfRange(f"m={m} outside table range")
    return float(table.d[m] / table.e[m])
