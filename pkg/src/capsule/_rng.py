"""Counter-based uniform draws: the value for ``(seed, index)`` needs no generator state."""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def splitmix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def counter_uniform(seed, index):
    """Uniform in [0, 1) determined only by ``(seed, index)``; ``index`` may be negative."""
    key = splitmix64(np.uint64(seed)) ^ np.uint64(np.int64(index))
    return float(splitmix64(key) >> _S11) * _INV53
