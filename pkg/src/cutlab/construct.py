"""Decay profiles and the machinery built from them.

A DecayProfile wraps a decreasing bijection Phi: [0,inf) -> (0,1] together
with phi = -log Phi, its inverse, and a log-space inverse that never
overflows (phi_inv itself exceeds float range for fast-growing phi).  From a
profile the module derives

* the divergence classifications of ``sum 1/(1 v log phi^{-1}(n))`` and of
  ``int_0^1 du/(u (1 v log Phi^{-1}(u)))``, which agree for every profile
  (substituting t = log(1/u) turns the integral into the continuous analogue
  of the sum),
* a sparse scale schedule a(k) with block structure d_i = min{m :
  sum_n f(b_i + 2^i n) >= 1}, b_{i+1} = b_i + 2^i d_i,
* the threshold function inverse psi^{-1}(x) = 8 phi^{-1}(a(8 a^{-1}(x))),
  with a extended to the reals by linear interpolation, and
* the sharpness chain whose Green function is an exact multiple of
  Phi_tilde(x) = Phi((x+M)^4) e^{-sqrt(log(x+2))}.

Divergence of improper sums/integrals is reported as a trend classification
with the fitted evidence attached, never as a certified fact.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .chains import BirthDeathChain
from .errors import (BlockOverflow, NonIncreasingInverse, NotLogConvex,
                     QuadratureFailure)

__all__ = [
    "DecayProfile", "ScaleSchedule", "PsiInv", "SharpnessChain", "TrendReport",
    "stock_profiles", "profile_from_spec", "chain_from_profile",
    "sum_condition", "integral_condition", "build_sparse_schedule",
    "build_psi", "sharpness_chain", "sharpness_f", "sharpness_f_log_deriv",
]

# Divergent-like iff the last octave increments of the partial sums have not
# started shrinking geometrically; see TrendReport.
_DOUBLING_THRESHOLD = 0.75


class DecayProfile:
    """Decreasing bijection Phi with derivative, inverse, and log-convexity index.

    Parameters
    ----------
    name : str
    phi, phi_inv : callables (vectorized)
        phi = -log Phi and its inverse.
    log_phi_inv : callable
        log(phi_inv(y)) evaluated without overflow.
    dphi : callable
        phi'(x), so Phi'(x) = -phi'(x) Phi(x).
    m_convex : int
        Smallest integer with Phi log-convex on [M, inf); caller-supplied and
        spot-checked numerically (global log-convexity is not machine
        checkable for black-box Phi).
    """

    def __init__(self, name, phi, phi_inv, log_phi_inv, dphi, m_convex=0,
                 params=None):
        self.name = name
        self.phi = phi
        self.phi_inv = phi_inv
        self.log_phi_inv = log_phi_inv
        self.dphi = dphi
        self.M = int(m_convex)
        self.params = dict(params or {})
        self._spot_check()

    def Phi(self, x):
        return np.exp(-self.phi(np.asarray(x, dtype=np.float64)))

    def Phi_prime(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -self.dphi(x) * np.exp(-self.phi(x))

    def Phi_inv(self, u):
        """Inverse of Phi (not the reciprocal)."""
        return self.phi_inv(-np.log(np.asarray(u, dtype=np.float64)))

    def log_Phi(self, x):
        return -self.phi(np.asarray(x, dtype=np.float64))

    def _spot_check(self):
        if abs(float(self.phi(0.0))) > 1e-9:
            raise ValueError(f"{self.name}: Phi(0) must be 1 (phi(0)=0)")
        grid = np.linspace(0.0, 64.0, 257)
        vals = self.phi(grid)
        if np.any(np.diff(vals) <= 0):
            raise ValueError(f"{self.name}: Phi must be strictly decreasing")
        # log-convexity of Phi on [M, M+1000]: second differences of log Phi
        g = np.arange(self.M, self.M + 1001, dtype=np.float64)
        lp = self.log_Phi(g)
        if np.any(lp[:-2] + lp[2:] - 2.0 * lp[1:-1] < -1e-9):
            raise NotLogConvex(f"{self.name}: log Phi not convex on [M, M+1000]")

    def __repr__(self):
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"DecayProfile({self.name}{':' + inner if inner else ''})"


def _poly_profile(c):
    c = float(c)

    def phi(x):
        return c * np.log1p(np.asarray(x, dtype=np.float64))

    def phi_inv(y):
        with np.errstate(over="ignore"):
            return np.expm1(np.asarray(y, dtype=np.float64) / c)

    def log_phi_inv(y):
        z = np.asarray(y, dtype=np.float64) / c
        with np.errstate(divide="ignore"):
            return z + np.log1p(-np.exp(-z))

    def dphi(x):
        return c / (1.0 + np.asarray(x, dtype=np.float64))

    return DecayProfile(f"poly", phi, phi_inv, log_phi_inv, dphi, 0, {"c": c})


def _poly_shift_profile(shift):
    """Phi(x) = shift/(x + shift): the decay profile of the poly-Green chain."""
    a = float(shift)

    def phi(x):
        return np.log1p(np.asarray(x, dtype=np.float64) / a)

    def phi_inv(y):
        with np.errstate(over="ignore"):
            return a * np.expm1(np.asarray(y, dtype=np.float64))

    def log_phi_inv(y):
        z = np.asarray(y, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return math.log(a) + z + np.log1p(-np.exp(-z))

    def dphi(x):
        return 1.0 / (a + np.asarray(x, dtype=np.float64))

    return DecayProfile("poly_shift", phi, phi_inv, log_phi_inv, dphi, 0,
                        {"shift": a})


_SQRT_LOG2 = math.sqrt(math.log(2.0))


def _sqrt_log_profile():
    """Phi(x) = exp(-sqrt(log(x+2)) + sqrt(log 2)); convergent condition."""

    def phi(x):
        return np.sqrt(np.log(np.asarray(x, dtype=np.float64) + 2.0)) - _SQRT_LOG2

    def phi_inv(y):
        s = np.asarray(y, dtype=np.float64) + _SQRT_LOG2
        with np.errstate(over="ignore"):
            return np.exp(s * s) - 2.0

    def log_phi_inv(y):
        s = np.asarray(y, dtype=np.float64) + _SQRT_LOG2
        z = s * s
        with np.errstate(divide="ignore"):
            return z + np.log1p(-2.0 * np.exp(-np.minimum(z, 700.0)))

    def dphi(x):
        x = np.asarray(x, dtype=np.float64)
        return 1.0 / (2.0 * (x + 2.0) * np.sqrt(np.log(x + 2.0)))

    return DecayProfile("sqrt_log", phi, phi_inv, log_phi_inv, dphi, 0)


_SLOWLOG_A = math.exp(math.e)


def _slowlog_u(target):
    """Solve u/log(u) = target for u >= e (vectorized bisection)."""
    target = np.asarray(target, dtype=np.float64)
    lo = np.full_like(target, math.e)
    hi = np.maximum(4.0 * target * np.log(target + 3.0) + 20.0, 10.0)
    for _ in range(64):
        grow = hi / np.log(hi) < target
        if not grow.any():
            break
        hi = np.where(grow, 2.0 * hi, hi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        low = mid / np.log(mid) < target
        lo = np.where(low, mid, lo)
        hi = np.where(low, hi, mid)
    return 0.5 * (lo + hi)


def _slowlog_profile():
    """Phi(x) = exp(e - log(x+A)/loglog(x+A)) with A = e^e, so Phi(0) = 1.

    The decay class of exp(-log x/loglog x): slightly slower than every
    polynomial, yet the divergence condition still holds.  The base point A
    keeps loglog positive (at A = e the normalization would divide by zero).
    """

    def phi(x):
        y = np.asarray(x, dtype=np.float64) + _SLOWLOG_A
        ly = np.log(y)
        return ly / np.log(ly) - math.e

    def phi_inv(y):
        u = _slowlog_u(np.asarray(y, dtype=np.float64) + math.e)
        with np.errstate(over="ignore"):
            return np.exp(u) - _SLOWLOG_A

    def log_phi_inv(y):
        u = _slowlog_u(np.asarray(y, dtype=np.float64) + math.e)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = u + np.log1p(-_SLOWLOG_A * np.exp(-np.minimum(u, 700.0)))
        return out

    def dphi(x):
        y = np.asarray(x, dtype=np.float64) + _SLOWLOG_A
        ll = np.log(np.log(y))
        return (ll - 1.0) / (y * ll * ll)

    # log Phi turns convex at x ~ 12.55 (numerically located)
    return DecayProfile("slowlog", phi, phi_inv, log_phi_inv, dphi, 13)


def stock_profiles():
    """The shipped profile library, keyed by label."""
    return {
        "poly_half": _poly_profile(0.5),
        "poly": _poly_profile(1.0),
        "poly_2": _poly_profile(2.0),
        "poly_shift": _poly_shift_profile(2.0),
        "sqrt_log": _sqrt_log_profile(),
        "slowlog": _slowlog_profile(),
    }


def profile_from_spec(spec):
    """Profile from a JSON chain/profile specification (see chains.from_spec)."""
    name = spec["profile"]
    if name == "poly":
        return _poly_profile(float(spec.get("c", 1.0)))
    if name == "poly_half":
        return _poly_profile(0.5)
    if name == "poly_2":
        return _poly_profile(2.0)
    if name == "poly_shift":
        return _poly_shift_profile(float(spec.get("shift", 2.0)))
    if name == "sqrt_log":
        return _sqrt_log_profile()
    if name == "slowlog":
        return _slowlog_profile()
    raise ValueError(f"unknown profile {name!r}")


def chain_from_profile(profile):
    """Birth-death chain whose Green function is an exact multiple of Phi.

    Drifts come from second differences of log Phi; the exact log hitting
    probability is -phi(n), so tables take the analytic route.
    """

    def drift(i):
        n = np.asarray(i, dtype=np.float64)
        a = -profile.phi(n - 1.0)
        b = -profile.phi(n)
        c = -profile.phi(n + 1.0)
        num = 1.0 + np.exp(c - a) - 2.0 * np.exp(b - a)
        den = 1.0 - np.exp(c - a)
        return 0.5 * num / den

    def exact_log_h(n):
        return -profile.phi(np.asarray(n, dtype=np.float64))

    return BirthDeathChain(drift, validate_up_to=64, vectorized=True,
                           exact_log_h=exact_log_h,
                           label=f"greens_profile({profile!r})")


@dataclass
class TrendReport:
    """Advisory divergence classification of a partial-sum/integral sequence.

    ``doubling_ratios`` compares increments over successive octaves of the
    index: ratios near 1 mean the increments have not started to die
    (harmonic-like divergence), ratios well below 1 mean geometric decay of
    the increments (convergent tail).  ``growth_exponent`` is the fitted
    exponent of S in log N over the tail of the grid.  The classification is
    evidence, never a proof.
    """

    classification: str
    doubling_ratios: np.ndarray
    growth_exponent: float
    grid: np.ndarray
    values: np.ndarray
    final_value: float

    @property
    def divergent_like(self):
        return self.classification == "divergent-like"


def _classify_growth(xs, values):
    """TrendReport from partial sums ``values`` at increasing indices ``xs``."""
    xs = np.asarray(xs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    # increments over octaves of xs
    octs = []
    x = xs[-1]
    while x > max(4.0, xs[0] * 2.0):
        octs.append(x)
        x /= 2.0
    octs = np.array(octs[::-1])
    inc = []
    for hi in octs:
        lo_v = np.interp(hi / 2.0, xs, values)
        hi_v = np.interp(hi, xs, values)
        inc.append(hi_v - lo_v)
    inc = np.asarray(inc)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = inc[1:] / inc[:-1]
    ratios = ratios[np.isfinite(ratios)]
    tail_ratios = ratios[-3:] if ratios.size >= 3 else ratios
    divergent = tail_ratios.size > 0 and float(np.mean(tail_ratios)) >= _DOUBLING_THRESHOLD
    # growth exponent of S in log N over the tail of the grid
    mask = xs >= max(np.exp(1.0), xs[(len(xs) // 2):][0])
    lx = np.log(np.log(xs[mask]))
    lv = np.log(values[mask])
    if lx.size >= 2 and lx[-1] > lx[0]:
        slope = np.polyfit(lx, lv, 1)[0]
    else:
        slope = 0.0
    return TrendReport(
        classification="divergent-like" if divergent else "convergent-like",
        doubling_ratios=ratios,
        growth_exponent=float(slope),
        grid=xs,
        values=values,
        final_value=float(values[-1]),
    )


def sum_condition(phi_inv, n_max, log_phi_inv=None):
    """Partial sums of sum_n 1/(1 v log phi^{-1}(n)) with a trend report.

    Parameters
    ----------
    phi_inv : callable or None
        Vectorized inverse; weakly increasing values are allowed.
    n_max : int
    log_phi_inv : callable, optional
        Stable log of the inverse; required when phi_inv overflows floats on
        [1, n_max] (pass the profile's ``log_phi_inv``).

    Returns
    -------
    (ndarray, TrendReport)
        Partial sums S_1..S_n_max and the advisory classification.

    Raises
    ------
    NonIncreasingInverse
        If the sampled inverse decreases anywhere.
    """
    if phi_inv is None and log_phi_inv is None:
        raise ValueError("need phi_inv or log_phi_inv")
    n = np.arange(1, n_max + 1, dtype=np.float64)
    if log_phi_inv is not None:
        lv = np.asarray(log_phi_inv(n), dtype=np.float64)
    else:
        vals = np.asarray(phi_inv(n), dtype=np.float64)
        if np.any(vals <= 0):
            raise NonIncreasingInverse("phi_inv must be positive")
        if np.any(np.diff(vals) < 0):
            k = int(np.argmax(np.diff(vals) < 0)) + 1
            raise NonIncreasingInverse(f"phi_inv decreases at n={k}")
        lv = np.log(vals)
    if np.any(np.diff(lv) < -1e-12):
        k = int(np.argmax(np.diff(lv) < -1e-12)) + 1
        raise NonIncreasingInverse(f"phi_inv decreases at n={k}")
    terms = 1.0 / np.maximum(1.0, lv)
    sums = np.cumsum(terms)
    report = _classify_growth(n, sums)
    return sums, report


def integral_condition(profile, eps_grid, epsrel=1e-8):
    """Partial integrals I(eps) of int_eps^1 du/(u (1 v log Phi^{-1}(u))).

    The substitution t = log(1/u) gives the smooth integrand
    1/(1 v log phi^{-1}(t)) on [0, log(1/eps)], integrated panel by panel
    with adaptive quadrature at relative tolerance ``epsrel``.

    Returns
    -------
    (ndarray, TrendReport, bool)
        I at each eps (decreasing grid), the trend report, and whether the
        classification agrees with the sum form of the condition.

    Raises
    ------
    QuadratureFailure
    """
    eps = np.asarray(eps_grid, dtype=np.float64)
    if np.any(eps <= 0) or np.any(eps >= 1) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_grid must be decreasing inside (0, 1)")

    def integrand(t):
        return 1.0 / max(1.0, float(profile.log_phi_inv(t)))

    # kink where log phi_inv crosses 1 (the 1-or-log clamp switches)
    t_kink = float(profile.phi(math.e))
    ts = np.concatenate([[0.0], np.log(1.0 / eps)])
    partial = np.zeros(eps.shape[0])
    acc = 0.0
    for j in range(eps.shape[0]):
        a, b = ts[j], ts[j + 1]
        pts = [t_kink] if a < t_kink < b else None
        try:
            val, err = quad(integrand, a, b, epsrel=epsrel, limit=200, points=pts)
        except Exception as ex:  # pragma: no cover - scipy-internal failure
            raise QuadratureFailure(str(ex)) from ex
        if not math.isfinite(val) or (abs(val) > 0 and err > 10 * epsrel * abs(val) + 1e-12):
            raise QuadratureFailure(f"panel [{a}, {b}] error {err:.2e} too large")
        acc += val
        partial[j] = acc
    report = _classify_growth(np.log(1.0 / eps), partial)
    _, sum_report = sum_condition(None, max(int(math.ceil(ts[-1])), 8),
                                  log_phi_inv=profile.log_phi_inv)
    return partial, report, report.classification == sum_report.classification


class ScaleSchedule:
    """Sparse strictly increasing scale sequence a(k) from the block construction.

    Blocks are built on demand: block i contributes d_i entries
    b_i + 2^i, b_i + 2^i 2, ..., b_i + 2^i d_i (block 0 only positions b_1).
    ``a`` is extended to a real increasing bijection by linear interpolation
    (a(0) = 0), which any increasing extension is allowed to do.
    """

    def __init__(self, f, cap=10 ** 6):
        self.f = f
        self.cap = int(cap)
        self.blocks = []  # (b_i, d_i) for i >= 0
        self._a = [0]  # a(0) = 0 sentinel for interpolation
        self._build_block()  # block 0 fixes b_1

    def _block_sum_min(self, b, step):
        """d = min{m : sum_{n=1}^m f(b + step*n) >= 1} by chunked cumsum.

        A crossing whose increment sits below the float noise floor of the
        accumulated sum is a rounding artifact of a saturating (convergent)
        series, not a real crossing, and is ignored.
        """
        total = 0.0
        m0 = 0
        chunk = 4096
        noise = 4.0 * np.finfo(np.float64).eps
        while m0 < self.cap:
            ms = np.arange(m0 + 1, min(m0 + chunk, self.cap) + 1, dtype=np.float64)
            vals = np.asarray(self.f(b + step * ms), dtype=np.float64)
            csum = total + np.cumsum(vals)
            hit = np.nonzero((csum >= 1.0) & (vals >= noise * csum))[0]
            if hit.size:
                return m0 + int(hit[0]) + 1
            total = float(csum[-1])
            m0 += ms.size
        raise BlockOverflow(
            f"block at b={b}, step={step} needs more than cap={self.cap} terms; "
            "the sum of f may converge")

    def _build_block(self):
        i = len(self.blocks)
        b = self.blocks[-1][0] + (2 ** (i - 1)) * self.blocks[-1][1] if i else 0
        d = self._block_sum_min(b, 2 ** i)
        self.blocks.append((b, d))
        if i >= 1:
            step = 2 ** i
            self._a.extend(b + step * n for n in range(1, d + 1))

    def extend_to_index(self, k):
        while len(self._a) - 1 < k:
            self._build_block()

    def extend_to_value(self, x):
        while self._a[-1] < x:
            self._build_block()

    def a(self, k):
        """a(k) for integer k >= 1."""
        if k < 1:
            raise IndexError("a defined for k >= 1")
        self.extend_to_index(k)
        return self._a[k]

    def prefix(self, k):
        """a(1..k) as an int array."""
        self.extend_to_index(k)
        return np.array(self._a[1: k + 1])

    def a_real(self, x):
        """Piecewise-linear extension of a to the nonnegative reals."""
        x = np.asarray(x, dtype=np.float64)
        self.extend_to_index(int(np.ceil(np.max(x))) + 1)
        knots = np.arange(len(self._a), dtype=np.float64)
        return np.interp(x, knots, np.asarray(self._a, dtype=np.float64))

    def a_inv(self, y):
        """Inverse of the piecewise-linear extension."""
        y = np.asarray(y, dtype=np.float64)
        self.extend_to_value(float(np.max(y)))
        knots = np.arange(len(self._a), dtype=np.float64)
        return np.interp(y, np.asarray(self._a, dtype=np.float64), knots)


def build_sparse_schedule(f, cap=10 ** 6):
    """Scale schedule from a decreasing f whose sum the caller asserts divergent.

    Each completed block i >= 1 contributes at least 1 to sum_n f(a(n)).

    Raises
    ------
    BlockOverflow
        If some block needs more than ``cap`` terms (the sum of f may
        converge after all).
    """
    return ScaleSchedule(f, cap)


class PsiInv:
    """The threshold-function inverse psi^{-1} built over a scale schedule.

    ``psi_inv(x) = 8 phi^{-1}(a(8 a^{-1}(x)))`` with the square cap applied
    directly (``phi^{-1}`` replaced by ``max(phi^{-1}(z), z^2)``), which
    enforces psi(x) <= sqrt(x), i.e. psi_inv(x) >= 8 x^2.  Thresholds
    Psi(k) = exp(-k/(2 psi_inv(k))) are computed through ``log_threshold`` to
    stay finite when phi^{-1} overflows.
    """

    def __init__(self, profile=None, schedule=None, sqrt_cap=True, identity=False):
        self.profile = profile
        self.schedule = schedule
        self.sqrt_cap = sqrt_cap
        self.identity = identity

    @classmethod
    def make_identity(cls):
        """psi = identity: Psi(k) = exp(-1/2) at every scale."""
        return cls(identity=True)

    def _z(self, x):
        return self.schedule.a_real(8.0 * self.schedule.a_inv(np.asarray(x, dtype=np.float64)))

    def __call__(self, x):
        if self.identity:
            return np.asarray(x, dtype=np.float64)
        z = self._z(x)
        v = self.profile.phi_inv(z)
        if self.sqrt_cap:
            v = np.maximum(v, z * z)
        return 8.0 * v

    def log_psi_inv(self, x):
        if self.identity:
            return np.log(np.asarray(x, dtype=np.float64))
        z = self._z(x)
        lv = self.profile.log_phi_inv(z)
        if self.sqrt_cap:
            with np.errstate(divide="ignore"):
                lv = np.maximum(lv, 2.0 * np.log(z))
        return math.log(8.0) + lv

    def log_threshold(self, k):
        """log Psi(k) = -k/(2 psi^{-1}(k)), stable for huge psi^{-1}.

        Scale 0 gets threshold 1 by convention (the 0/0 form of the
        exponent); no experiment draws statistics from scale 0.
        """
        k = np.asarray(k, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.exp(np.log(k / 2.0) - self.log_psi_inv(k))
        return np.where(k > 0, out, 0.0)


def build_psi(profile, schedule, sqrt_cap=True):
    """psi^{-1} over a schedule built from f(k) = 1/(1 v log phi^{-1}(k)).

    ``sqrt_cap=False`` drops the square cap and evaluates the raw
    composition (useful for plug-in checks); the capped form guarantees
    psi_inv(x) >= 8 x^2 for any increasing inputs.
    """
    return PsiInv(profile, schedule, sqrt_cap=sqrt_cap)


def schedule_and_psi(profile, cap=10 ** 6):
    """The (a, psi^{-1}) pair of the good-scales lemma for one profile."""

    def f(k):
        return 1.0 / np.maximum(1.0, profile.log_phi_inv(np.asarray(k, dtype=np.float64)))

    schedule = build_sparse_schedule(f, cap=cap)
    return schedule, build_psi(profile, schedule)


def sharpness_f(x):
    """The fixed log-convex factor f(x) = exp(-sqrt(log(x+2)))."""
    return np.exp(-np.sqrt(np.log(np.asarray(x, dtype=np.float64) + 2.0)))


def sharpness_f_log_deriv(x):
    """-(log f)'(x) = 1/(2 (x+2) sqrt(log(x+2)))."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (2.0 * (x + 2.0) * np.sqrt(np.log(x + 2.0)))


@dataclass
class SharpnessChain:
    """Chain with Green function exactly proportional to Phi_tilde.

    Phi_tilde(x) = Phi((x+M)^4) f(x) is strictly decreasing and log-convex
    when M is at least the profile's log-convexity index and at least 2 (the
    fourth-power composition spoils log-convexity near 0 for smaller M).
    Drifts follow from second differences of Phi_tilde; by induction this
    forces G(n) = C Phi_tilde(n) with C = G(0)/Phi_tilde(0).
    """

    profile: DecayProfile
    m_shift: int
    chain: BirthDeathChain = field(repr=False)

    def log_phi_tilde(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -self.profile.phi((x + self.m_shift) ** 4) - np.sqrt(np.log(x + 2.0))

    def f(self, x):
        return sharpness_f(x)

    def phi_tilde(self, x):
        return np.exp(self.log_phi_tilde(x))


def sharpness_chain(profile, up_to=1024, m_shift=None):
    """Build the sharpness chain of a (convergent-condition) profile.

    Parameters
    ----------
    profile : DecayProfile
        Must be eventually log-convex with finite index M.
    up_to : int
        Range over which drifts are validated eagerly (lazily beyond).
    m_shift : int, optional
        Shift M in Phi((x+M)^4); defaults to max(2, profile.M).  Values
        below 2 typically break log-convexity of Phi_tilde near 0.

    Raises
    ------
    NotLogConvex
        If sampled second differences of log Phi_tilde are negative beyond
        -1e-12, or a generated drift leaves (0, 1/2).
    """
    m = int(m_shift) if m_shift is not None else max(2, profile.M)

    def log_pt(x):
        x = np.asarray(x, dtype=np.float64)
        return -profile.phi((x + m) ** 4) - np.sqrt(np.log(x + 2.0))

    probe = log_pt(np.arange(0, min(up_to, 4096) + 2, dtype=np.float64))
    second = probe[:-2] + probe[2:] - 2.0 * probe[1:-1]
    if np.any(second < -1e-12):
        i = int(np.argmax(second < -1e-12))
        raise NotLogConvex(
            f"log Phi_tilde second difference {second[i]:.3e} < -1e-12 at x={i} "
            f"(profile {profile.name}, M={m})")

    def drift(i):
        n = np.asarray(i, dtype=np.float64)
        a = log_pt(n - 1.0)
        b = log_pt(n)
        c = log_pt(n + 1.0)
        num = 1.0 + np.exp(c - a) - 2.0 * np.exp(b - a)
        den = 1.0 - np.exp(c - a)
        p = 0.5 * num / den
        bad = (p <= 0.0) | (p >= 0.5)
        if np.any(bad):
            j = int(np.asarray(i)[np.argmax(bad)]) if np.ndim(i) else int(i)
            raise NotLogConvex(f"generated drift leaves (0, 1/2) at i={j}")
        return p

    def exact_log_h(n):
        return log_pt(n) - float(log_pt(0.0))

    chain = BirthDeathChain(drift, validate_up_to=up_to, vectorized=True,
                            exact_log_h=exact_log_h,
                            label=f"sharpness({profile.name},M={m})")
    return SharpnessChain(profile=profile, m_shift=m, chain=chain)
