# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: birth-death stepping and the hitting-ratio bracket scan.

Must stay bit-identical to the numpy fallback in ``_kernels_py``; the RNG is
the keyed splitmix64 from ``_rng``.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15u
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9u
cdef uint64_t MIX2 = 0x94D049BB133111EBu
cdef double U01_SCALE = 1.0 / 9007199254740992.0  # 2^-53

IMPLEMENTATION = "cython"


cdef inline double u01_at(uint64_t key, uint64_t counter) nogil:
    cdef uint64_t z = key + (counter + 1u) * GOLDEN
    z ^= z >> 30
    z *= MIX1
    z ^= z >> 27
    z *= MIX2
    z ^= z >> 31
    return <double> (z >> 11) * U01_SCALE


def bd_path(double[::1] e, int64_t x0, int64_t n_max, key, counter0,
            int64_t stop_level, int[::1] out):
    """Walk up to ``n_max`` birth-death steps from ``x0``.

    ``e[i]`` is the up-probability at state ``i``.  States are written to
    ``out[0..n_done]`` with ``out[0] = x0``.  Returns ``(n_done, reason)``
    with reason 0 = horizon reached, 1 = ``stop_level`` hit, 2 = state
    reached ``len(e)-1`` (extend ``e`` and resume at ``counter0 + n_done``).
    """
    cdef uint64_t k = <uint64_t> key
    cdef uint64_t c0 = <uint64_t> counter0
    cdef int64_t cap = e.shape[0] - 1
    cdef int64_t x = x0
    cdef int64_t n = 0
    cdef int reason = 0
    cdef double u
    if out.shape[0] < n_max + 1:
        raise ValueError("output buffer too small")
    out[0] = <int> x
    with nogil:
        while n < n_max:
            if x >= cap:
                reason = 2
                break
            u = u01_at(k, c0 + <uint64_t> n)
            if u < e[x]:
                x += 1
            else:
                x -= 1
            n += 1
            out[n] = <int> x
            if x == stop_level:
                reason = 1
                break
    return n, reason


def visit_count(int[::1] states, int64_t n_done, int64_t target):
    """Number of indices 0..n_done with state equal to ``target``."""
    cdef int64_t i, count = 0
    cdef int t = <int> target
    with nogil:
        for i in range(n_done + 1):
            if states[i] == t:
                count += 1
    return count
