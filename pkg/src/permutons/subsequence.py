"""
subsequence.py
==============
Permutation-level longest-increasing-subsequence tools: the patience-sorting
algorithm with witness reconstruction, a quadratic oracle for small inputs,
and the increasing-subsequence predicate.  Tree-free on purpose, so these
serve as an independent measurement instrument against the tree dynamic
programs.
"""

from __future__ import annotations

from bisect import bisect_left

import numpy as np

__all__ = ["lis_patience", "lis_bruteforce", "is_increasing"]


def lis_patience(perm):
    """
    Length of a longest increasing subsequence and one witness.

    Patience sorting in O(n log n): pile tops stay sorted, each value lands
    on the leftmost pile whose top is >= value, predecessor links reconstruct
    a witness.  The witness is a list of 0-based positions strictly
    increasing in both index and value.
    """
    values = perm.values
    n = len(values)
    if n == 0:
        return 0, []
    tops = []          # current top value per pile
    top_idx = []       # position holding that top
    pred = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        v = values[i]
        j = bisect_left(tops, v)
        if j > 0:
            pred[i] = top_idx[j - 1]
        if j == len(tops):
            tops.append(v)
            top_idx.append(i)
        else:
            tops[j] = v
            top_idx[j] = i
    length = len(tops)
    witness = []
    i = top_idx[-1]
    while i >= 0:
        witness.append(int(i))
        i = pred[i]
    witness.reverse()
    return length, witness


def lis_bruteforce(perm, cap=20):
    """
    Exact LIS by the independent quadratic longest-chain DP; capped small
    because it exists only to cross-check lis_patience.
    """
    values = perm.values
    n = len(values)
    if n > cap:
        raise ValueError(f"lis_bruteforce: n={n} exceeds cap {cap}")
    if n == 0:
        return 0
    best = [1] * n
    for i in range(1, n):
        for j in range(i):
            if values[j] < values[i] and best[j] + 1 > best[i]:
                best[i] = best[j] + 1
    return max(best)


def is_increasing(perm, indices):
    """True iff the values at the (strictly increasing) indices increase."""
    idx = list(indices)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("indices must be strictly increasing")
    vals = perm.values
    return all(vals[b] > vals[a] for a, b in zip(idx, idx[1:]))
