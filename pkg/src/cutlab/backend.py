"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or ``CUTLAB_PURE_PYTHON=1`` is set.  Both backends are
bit-identical (see ``tests/test_backends.py``), so every result in the
package is independent of which one is active.
"""

import os

from . import _kernels_py

if os.environ.get("CUTLAB_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        _impl = _kernels_py

bd_path = _impl.bd_path
visit_count = _impl.visit_count
IMPLEMENTATION = _impl.IMPLEMENTATION


def backends():
    """All importable kernel backends, keyed by implementation name."""
    found = {_kernels_py.IMPLEMENTATION: _kernels_py}
    try:
        from . import _kernels_cy

        found[_kernels_cy.IMPLEMENTATION] = _kernels_cy
    except ImportError:
        pass
    return found
