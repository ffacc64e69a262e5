"""Pure-python/numpy fallback for the compiled kernels.

Bit-identical to ``_kernels_cy``: uniforms come from the same counter-based
generator and the state update uses the same float64 comparison.  Uniforms are
drawn in vectorized blocks; the state recursion itself is a python loop, so
this backend is roughly two orders of magnitude slower than the compiled one.
"""

import numpy as np

from ._rng import u01_block

IMPLEMENTATION = "python"

_BLOCK = 8192


def bd_path(e, x0, n_max, key, counter0, stop_level, out):
    """See ``_kernels_cy.bd_path``."""
    if out.shape[0] < n_max + 1:
        raise ValueError("output buffer too small")
    cap = e.shape[0] - 1
    x = int(x0)
    n = 0
    reason = 0
    out[0] = x
    e_list = e  # ndarray indexing; kept as float64 for exact comparisons
    while n < n_max:
        if x >= cap:
            return n, 2
        block = min(_BLOCK, n_max - n)
        us = u01_block(key, counter0 + n, block)
        for i in range(block):
            if x >= cap:
                return n, 2
            if us[i] < e_list[x]:
                x += 1
            else:
                x -= 1
            n += 1
            out[n] = x
            if x == stop_level:
                return n, 1
    return n, reason


def visit_count(states, n_done, target):
    """See ``_kernels_cy.visit_count``."""
    return int(np.count_nonzero(states[: n_done + 1] == target))
