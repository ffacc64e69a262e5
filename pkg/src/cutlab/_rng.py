"""Counter-based pseudo-random numbers for reproducible parallel Monte Carlo.

The generator is a keyed splitmix64: draw ``i`` of stream ``(master_seed,
stream_id)`` is ``finalize(key + (i+1)*GOLDEN)``, so any draw can be computed
independently of the others.  Trajectories are therefore resumable at an
arbitrary counter and embarrassingly parallel across streams, and the compiled
and pure-python kernels produce bit-identical output.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03
_KILL_SALT = 0x6A09E667F3BCC909

U01_SCALE = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on python ints (mod 2^64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_key(master_seed: int, stream_id: int) -> int:
    """Derive the 64-bit key of one stream from the master seed."""
    a = mix64((master_seed + GOLDEN) & MASK64)
    b = mix64((stream_id + _STREAM_SALT) & MASK64)
    return mix64(a ^ ((b + GOLDEN) & MASK64))


def kill_key(key: int) -> int:
    """Secondary key used for killing-time draws on the same stream."""
    return mix64(key ^ _KILL_SALT)


def u64_block(key: int, counter0: int, n: int) -> np.ndarray:
    """Draws ``counter0 .. counter0+n-1`` of the stream as uint64 (vectorized)."""
    c = np.arange(counter0 + 1, counter0 + n + 1, dtype=np.uint64)
    z = (np.uint64(key) + c * np.uint64(GOLDEN)).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def u01_block(key: int, counter0: int, n: int) -> np.ndarray:
    """Uniform [0,1) draws ``counter0 .. counter0+n-1`` of the stream."""
    return (u64_block(key, counter0, n) >> np.uint64(11)).astype(np.float64) * U01_SCALE


def u01(key: int, counter: int) -> float:
    """Single uniform draw at the given counter."""
    z = mix64((key + ((counter + 1) * GOLDEN)) & MASK64)
    return (z >> 11) * U01_SCALE
