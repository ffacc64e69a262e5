"""cutlab: a simulation and verification lab for cut times of transient Markov chains.

Modules
-------
chains      birth-death chains, networks with killing, truncated kernels
greens      exact Green/hitting/D-series tables and identities
construct   decay profiles, divergence conditions, scale schedules, sharpness chains
simulate    seeded trajectories, certified cut-time detection, visit statistics
scales      drop decompositions, psi-good scales, permadrop counting
killing     spatially-dependent killing, Varopoulos-Carne and ratio checks
cli         experiment presets with CSV/JSON reporting
"""

from .backend import IMPLEMENTATION

__version__ = "0.1.0"

__all__ = ["IMPLEMENTATION", "__version__"]
