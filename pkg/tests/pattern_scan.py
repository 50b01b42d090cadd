"""Vectorized scan for the forbidden patterns 2413 and 3142."""

import numpy as np
from itertools import combinations

_QUAD_CACHE = {}


def _quadruples(n):
    if n not in _QUAD_CACHE:
        idx = np.array(list(combinations(range(n), 4)), dtype=np.int64)
        _QUAD_CACHE[n] = (idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3])
    return _QUAD_CACHE[n]


def avoids_2413_3142(perm):
    """True iff no four positions i<j<k<l realize value order 2413 or 3142."""
    v = perm.values
    n = len(v)
    if n < 4:
        return True
    i, j, k, l = _quadruples(n)
    vi, vj, vk, vl = v[i], v[j], v[k], v[l]
    pat_2413 = (vk < vi) & (vi < vl) & (vl < vj)
    pat_3142 = (vj < vl) & (vl < vi) & (vi < vk)
    return not bool((pat_2413 | pat_3142).any())
