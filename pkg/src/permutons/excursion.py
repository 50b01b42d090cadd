"""
excursion.py
============
Discrete signed excursions: strictly positive ±1 walks with random signs at
their interior local minima.

A walk of half-length N starts and ends at zero, stays strictly positive in
between, and carries an independent plus/minus coin at every strict local
minimum.  Cutting the walk at the minima organizes any set of interior
sample positions into a signed binary tree (the same arena type produced by
the direct tree sampler), which turns the excursion into a permutation
sampler.  Raising a horizontal level h sweeps out a fragmentation: the
indices above h split into maximal intervals, and the interval containing a
tagged position shrinks through a sequence of branching events.  The
survival question — does the tagged interval drop below length eps before a
minus branching would discard it under the keep-the-bigger-side rule —
drives the scaling experiments.

Fragment lengths are rationals with denominator 2N and are kept as integer
numerators throughout; floats appear only in reported fractions and in the
eps comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trees import MINUS, PLUS, Permutation, SignedBinaryTree, to_permutation

__all__ = [
    "KEPT_LEFT",
    "KEPT_RIGHT",
    "DiscreteExcursion",
    "FragmentTrace",
    "sample_excursion",
    "sample_points",
    "local_minima",
    "assign_signs",
    "cartesian_tree",
    "perm_from_points",
    "fragment_trace",
    "survival_threshold",
    "survives_to_eps",
    "two_point_survival",
]

# side codes for fragment-trace records: which child interval kept the tag
KEPT_LEFT = 0
KEPT_RIGHT = 1

# sign code for branch events at slope records, which are not local minima
# and carry no coin
UNSIGNED = 0


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _uniform_step_word(total, ups, rng):
    """
    Uniform arrangement of `ups` up-steps and `total - ups` down-steps, int8.

    Starts from iid fair coin flips and repairs the count by flipping a
    uniform subset of the surplus side.  Conditioned on the surplus size the
    flip set is a uniform subset of the surplus steps, which gives every
    target word the same mass, so the repaired word is exactly uniform over
    arrangements.  This beats a Fisher-Yates shuffle by several times at the
    lengths the scaling experiments use.
    """
    nbytes = (total + 7) // 8
    bits = np.unpackbits(np.frombuffer(rng.bytes(nbytes), dtype=np.uint8))
    bits = bits[:total]
    steps = bits.astype(np.int8)
    steps *= 2
    steps -= 1
    delta = int(np.count_nonzero(bits)) - ups
    if delta != 0:
        surplus = np.int8(1) if delta > 0 else np.int8(-1)
        # uniform subset of the surplus positions by vectorized rejection:
        # draw uniform indices, keep hits, dedupe in draw order
        chosen = np.empty(0, dtype=np.int64)
        need = abs(delta)
        while len(chosen) < need:
            pool = rng.integers(0, total, size=2 * (need - len(chosen)) + 16)
            pool = np.concatenate([chosen, pool[steps[pool] == surplus]])
            _, first = np.unique(pool, return_index=True)
            chosen = pool[np.sort(first)][:need]
        steps[chosen] = -surplus
    return steps


def sample_excursion(N, rng):
    """
    Heights of a uniform strictly positive ±1 excursion of length 2N.

    Draws a uniform arrangement of N up-steps and N - 1 down-steps, rotates
    it at the last minimum of its prefix sums so that every prefix becomes
    strictly positive (the rotation is unique), and appends a final
    down-step.  The result is uniform over the Catalan(N-1) walks of length
    2N that start and end at 0 and stay > 0 strictly in between.

    Parameters
    ----------
    N : int                  Half-length, >= 1.
    rng : numpy Generator    Source of randomness.

    Returns
    -------
    int32 ndarray of 2N + 1 heights.
    """
    if N < 1:
        raise ValueError("sample_excursion: need N >= 1")
    if N == 1:
        return np.array([0, 1, 0], dtype=np.int32)
    steps = _uniform_step_word(2 * N - 1, N, rng)
    prefix = np.empty(2 * N, dtype=np.int32)
    prefix[0] = 0
    np.cumsum(steps, dtype=np.int32, out=prefix[1:])
    # last argmin; the final prefix (= +1) is never minimal
    m = len(prefix) - 1 - int(np.argmin(prefix[::-1]))
    e = np.empty(2 * N + 1, dtype=np.int32)
    e[0] = 0
    e[2 * N] = 0
    np.cumsum(np.concatenate([steps[m:], steps[:m]]), dtype=np.int32,
              out=e[1:2 * N])
    return e


def sample_points(N, count, rng):
    """
    Sorted distinct uniform interior indices of an excursion of length 2N.

    Uniform integers in [1, 2N-1]; collisions are resampled until count
    distinct values remain.
    """
    if count < 1 or count > 2 * N - 1:
        raise ValueError("sample_points: count must lie in [1, 2N-1]")
    pts = np.unique(rng.integers(1, 2 * N, size=count))
    while len(pts) < count:
        extra = rng.integers(1, 2 * N, size=count - len(pts))
        pts = np.unique(np.concatenate([pts, extra]))
    return pts


def _validate_heights(e):
    e = np.asarray(e)
    if e.dtype == object or not np.issubdtype(e.dtype, np.integer):
        e = np.asarray(e, dtype=np.int64)
    if e.ndim != 1 or len(e) < 3 or len(e) % 2 == 0:
        raise ValueError("heights must be a 1-d array of odd length >= 3")
    if e[0] != 0 or e[-1] != 0:
        raise ValueError("heights must start and end at 0")
    if np.any(np.abs(np.diff(e)) != 1):
        raise ValueError("heights must move by exactly 1 per step")
    if np.any(e[1:-1] <= 0):
        raise ValueError("interior heights must be strictly positive")
    return e


def local_minima(e):
    """Indices k with e[k-1] > e[k] < e[k+1], as an int64 array."""
    e = np.asarray(e)
    inner = (e[1:-1] < e[:-2]) & (e[1:-1] < e[2:])
    return np.nonzero(inner)[0] + 1


@dataclass
class DiscreteExcursion:
    """
    A strictly positive ±1 excursion with signed interior local minima.

    Attributes
    ----------
    e : integer ndarray     2N + 1 heights, 0 at both ends, > 0 inside.
    half_length : int       N.
    signs : dict            local-minimum index -> PLUS or MINUS.
    height_jitter : dict    local-minimum index -> uniform [0, 1) tie
                            breaker.  Integer heights collide with
                            probability of order 1/sqrt(N) where the
                            continuum analogue never ties; comparing
                            height + jitter restores almost-sure strict
                            ordering without biasing any comparison.
    """

    e: np.ndarray
    half_length: int
    signs: dict
    height_jitter: dict = None

    def __post_init__(self):
        if self.height_jitter is None:
            self.height_jitter = {}

    def sign_at(self, k):
        """PLUS/MINUS at a signed minimum, UNSIGNED (0) anywhere else."""
        return self.signs.get(k, UNSIGNED)


def assign_signs(e, p, rng):
    """
    Attach independent signs to every strict interior local minimum.

    Each minimum gets PLUS with probability p, plus an independent uniform
    height jitter used only to break integer-height ties between minima.
    Draw order is fixed (all coins, then all jitters) so results are
    reproducible from the generator state.  The heights are validated
    (endpoints zero, interior strictly positive, unit steps).
    """
    e = _validate_heights(e)
    if not 0.0 <= p <= 1.0:
        raise ValueError("assign_signs: p must lie in [0, 1]")
    mins = local_minima(e)
    coins = np.where(rng.random(len(mins)) < p, PLUS, MINUS).astype(np.int8)
    jitter = rng.random(len(mins))
    keys = mins.tolist()
    return DiscreteExcursion(
        e=e,
        half_length=(len(e) - 1) // 2,
        signs=dict(zip(keys, (int(c) for c in coins))),
        height_jitter=dict(zip(keys, jitter.tolist())),
    )


# ---------------------------------------------------------------------------
# point trees and permutations
# ---------------------------------------------------------------------------


def _single_leaf_tree():
    return SignedBinaryTree(
        left=np.array([-1], dtype=np.int64),
        right=np.array([-1], dtype=np.int64),
        sign=np.zeros(1, dtype=np.int8),
        leaf_count=np.ones(1, dtype=np.int64),
        leaf_rank=np.ones(1, dtype=np.int64),
        root=0,
        n=1,
    )


class _ArgminTable:
    """Sparse table answering leftmost-argmin queries over a key array."""

    def __init__(self, key):
        n = len(key)
        self.key = key
        self.levels = [np.arange(n, dtype=np.int64)]
        span = 1
        while 2 * span <= n:
            prev = self.levels[-1]
            m = n - 2 * span + 1
            a = prev[:m]
            b = prev[span:span + m]
            self.levels.append(np.where(key[b] < key[a], b, a))
            span *= 2
    def argmin(self, a, b):
        """Index of the smallest key in [a, b), earliest on ties."""
        level = (b - a).bit_length() - 1
        t = self.levels[level]
        i = int(t[a])
        j = int(t[b - (1 << level)])
        return j if self.key[j] < self.key[i] else i


def cartesian_tree(exc, points):
    """
    Organize sample positions into a signed binary tree via range minima.

    The point set splits at the lowest branching between its extremes: among
    the strict local minima strictly inside the spanned range (sample
    positions themselves excluded), the one with the smallest jittered
    height wins, its coin signs the split node, and the points on each side
    recurse.  Comparing height + jitter instead of raw integer height makes
    the winner almost surely unique, mirroring the continuum where distinct
    minima never share a height.

    Blocks with no interior minimum (points packed within a monotone
    stretch, a vanishing-probability configuration) fall back to the
    leftmost argmin of the raw heights over the closed spanned range: the
    split happens at the leftmost gap whose closed range contains that
    argmin, signed by the coin there if one exists and PLUS otherwise.

    Parameters
    ----------
    exc : DiscreteExcursion
    points : increasing interior indices, at least one.

    Returns
    -------
    SignedBinaryTree with one leaf per point, in point order.
    """
    e = exc.e
    signs = exc.signs
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 1 or len(pts) < 1:
        raise ValueError("cartesian_tree: need at least one point")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("cartesian_tree: points must be strictly increasing")
    if pts[0] < 1 or pts[-1] > len(e) - 2:
        raise ValueError("cartesian_tree: points must be interior indices")
    n = len(pts)
    if n == 1:
        return _single_leaf_tree()

    mins = local_minima(e)
    cand = mins[~np.isin(mins, pts)]
    jit = exc.height_jitter
    # a sparse table pays off only when there are many blocks to split;
    # small point sets just argmin each slice directly
    table = None
    if len(cand) and n - 1 >= len(cand).bit_length():
        key = e[cand] + np.array([jit.get(int(v), 0.0) for v in cand])
        table = _ArgminTable(key)

    def split_of(i, j):
        # returns (gap index k in [i, j), sign): left block pts[i..k],
        # right block pts[k+1..j]
        a = int(np.searchsorted(cand, pts[i], side="right"))
        b = int(np.searchsorted(cand, pts[j], side="left"))
        if b > a:
            if table is not None:
                v = int(cand[table.argmin(a, b)])
            else:
                sub = cand[a:b]
                k2 = e[sub] + np.fromiter(
                    (jit.get(int(x), 0.0) for x in sub), float, b - a
                )
                v = int(sub[np.argmin(k2)])
            k = int(np.searchsorted(pts, v)) - 1
            return k, int(signs.get(v, PLUS))
        # no interior minimum: raw-argmin fallback
        lo, hi = int(pts[i]), int(pts[j])
        m = lo + int(np.argmin(e[lo:hi + 1]))
        ins = int(np.searchsorted(pts, m, side="left"))
        if ins < n and pts[ins] == m:
            k = i if ins == i else ins - 1
        else:
            k = ins - 1
        return k, int(signs.get(m, PLUS))

    size = 2 * n - 1
    left = np.full(size, -1, dtype=np.int64)
    right = np.full(size, -1, dtype=np.int64)
    sign = np.zeros(size, dtype=np.int8)
    leaf_rank = np.zeros(size, dtype=np.int64)
    leaf_rank[n - 1:] = np.arange(1, n + 1)

    # internal ids 0..n-2 in creation order, leaf j -> id n-1+j
    next_id = 0
    stack = [(0, n - 1, -1, False)]
    root = -1
    while stack:
        i, j, parent, is_right = stack.pop()
        if i == j:
            v = n - 1 + i
        else:
            v = next_id
            next_id += 1
            k, s = split_of(i, j)
            sign[v] = s
            stack.append((k + 1, j, v, True))
            stack.append((i, k, v, False))
        if parent < 0:
            root = v
        elif is_right:
            right[parent] = v
        else:
            left[parent] = v

    tree = SignedBinaryTree(
        left=left,
        right=right,
        sign=sign,
        leaf_count=np.zeros(size, dtype=np.int64),
        leaf_rank=leaf_rank,
        root=root,
        n=n,
    )
    lc = tree.leaf_count
    for v in tree.postorder():
        lc[v] = 1 if left[v] < 0 else lc[left[v]] + lc[right[v]]
    return tree


def perm_from_points(exc, points):
    """Permutation read off the signed tree of the given sample positions."""
    return to_permutation(cartesian_tree(exc, points))


# ---------------------------------------------------------------------------
# tagged-fragment machinery
# ---------------------------------------------------------------------------


@dataclass
class FragmentTrace:
    """
    Branching history of the interval containing a tagged position.

    Sweeping the level h upward, the maximal interval above h containing the
    tag loses a piece at every branch event.  Events are listed in sweep
    order: increasing branch height, ties broken by smaller index (the
    leftmost of simultaneous minima splits first).  Lengths are numerators
    over 2N.

    Attributes
    ----------
    t : int                  Tagged position.
    half_length : int        N; fragment lengths are fractions over 2N.
    height : int64 ndarray   Branch heights, one per event.
    position : int64 ndarray Index of the minimum causing each event.
    side : int8 ndarray      KEPT_LEFT or KEPT_RIGHT (side containing t).
    sign : int8 ndarray      PLUS/MINUS at signed minima, 0 at slope
                             records (no coin there).
    parent_num : int64 ndarray  Interval length before the event.
    kept_num : int64 ndarray    Length of the kept side, strictly smaller.
    """

    t: int
    half_length: int
    height: np.ndarray
    position: np.ndarray
    side: np.ndarray
    sign: np.ndarray
    parent_num: np.ndarray
    kept_num: np.ndarray

    def __len__(self):
        return len(self.height)

    def kept_fraction(self):
        return self.kept_num / (2.0 * self.half_length)

    def parent_fraction(self):
        return self.parent_num / (2.0 * self.half_length)


def _record_positions(e, t):
    """
    Branch positions on the tag's path, sorted in event (sweep) order.

    Going left from t the records are weak (equal minima both split, the
    farther one earlier); going right they are strict (an equal minimum on
    the right is cut off by the earlier left one).  Endpoints 0 and 2N are
    the level-zero boundary, not branchings, and are dropped.
    """
    n2 = len(e) - 1
    if not 0 < t < n2:
        raise ValueError("tagged position must be strictly interior")

    seg = e[1:t + 1]
    rm = np.minimum.accumulate(seg[::-1])[::-1]
    left_pos = np.nonzero(seg[:-1] <= rm[1:])[0] + 1

    seg = e[t:n2]
    rm = np.minimum.accumulate(seg)
    right_pos = np.nonzero(seg[1:] < rm[:-1])[0] + t + 1

    pos = np.concatenate([left_pos, right_pos])
    order = np.lexsort((pos, e[pos]))
    return pos[order]


def fragment_trace(exc, t):
    """
    Full branching history of the fragment containing position t.

    Walks the sweep-ordered record positions, maintaining the bracketing
    interval (l, r) that starts at (0, 2N); each event moves one boundary
    inward and the kept side always contains t.

    Parameters
    ----------
    exc : DiscreteExcursion
    t : int     Interior index, 0 < t < 2N.
    """
    e = exc.e
    t = int(t)
    pos = _record_positions(e, t)
    m = len(pos)
    side = np.empty(m, dtype=np.int8)
    sign = np.empty(m, dtype=np.int8)
    parent = np.empty(m, dtype=np.int64)
    kept = np.empty(m, dtype=np.int64)
    l, r = 0, len(e) - 1
    for i, k in enumerate(pos.tolist()):
        parent[i] = r - l
        if k < t:
            side[i] = KEPT_RIGHT
            l = k
        else:
            side[i] = KEPT_LEFT
            r = k
        kept[i] = r - l
        sign[i] = exc.signs.get(k, UNSIGNED)
    return FragmentTrace(
        t=t,
        half_length=exc.half_length,
        height=e[pos],
        position=pos,
        side=side,
        sign=sign,
        parent_num=parent,
        kept_num=kept,
    )


def _threshold_from_records(e, t, pos, sign_of):
    """
    Smallest fragment fraction reached before the first discarding event.

    Walks events in sweep order; a signed MINUS minimum whose far side is
    strictly longer than the side containing t discards the tag (equal-split
    ties survive; they vanish in the continuum).  Returns the fragment
    fraction just before that event, 0.0 if nothing ever discards.
    """
    n2 = len(e) - 1
    l, r = 0, n2
    for k in pos.tolist():
        if k < t:
            kept_len = r - k
            lost = k - l
        else:
            kept_len = k - l
            lost = r - k
        if lost > kept_len and sign_of(k) == MINUS:
            return (r - l) / n2
        if k < t:
            l = k
        else:
            r = k
    return 0.0


def survival_threshold(exc, t):
    """
    The eps level at and above which the tagged position survives.

    survives_to_eps(exc, t, eps) is exactly eps >= this value: the fragment
    fraction shrinks through a fixed sequence of events, so the first
    discarding event (if any) freezes the smallest fraction reached before
    it.  Returns 0.0 when no event ever discards the tag.
    """
    e = exc.e
    t = int(t)
    pos = _record_positions(e, t)
    signs = exc.signs
    return _threshold_from_records(e, t, pos, lambda k: signs.get(k, UNSIGNED))


def survives_to_eps(exc, t, eps):
    """
    Does the tagged fragment shrink below eps before being discarded?

    True iff the fraction of the interval containing t drops to eps or
    below strictly before any MINUS branching whose far side is strictly
    longer than the near side (such a branching discards the tag under the
    keep-the-bigger-side rule; equal lengths keep both).

    Parameters
    ----------
    eps : float in (0, 1].
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    return survival_threshold(exc, t) <= eps


def two_point_survival(exc, t1, t2, eps):
    """
    Survival of two distinct tagged positions on one shared excursion.

    Returns (survives(t1), survives(t2)); both walks read the same signs.
    """
    if int(t1) == int(t2):
        raise ValueError("tagged positions must be distinct")
    return (survives_to_eps(exc, t1, eps), survives_to_eps(exc, t2, eps))
