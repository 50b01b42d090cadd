"""Tests for the signed-excursion sampler and tagged-fragment machinery."""

from __future__ import annotations

import bisect
import math

import numpy as np
import pytest
from scipy import stats

from permutons.excursion import (
    DiscreteExcursion,
    assign_signs,
    cartesian_tree,
    fragment_trace,
    local_minima,
    perm_from_points,
    sample_excursion,
    sample_points,
    survival_threshold,
    survives_to_eps,
    two_point_survival,
)
from permutons.trees import (
    MINUS,
    PLUS,
    to_permutation,
    tree_to_text,
    validate_tree,
)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


def excursion_for(N, p, seed):
    rng = rng_for(seed)
    return assign_signs(sample_excursion(N, rng), p, rng)


def forced_signs(e, sign):
    """Excursion with every local minimum set to one sign."""
    e = np.asarray(e, dtype=np.int64)
    signs = {int(k): sign for k in local_minima(e)}
    return DiscreteExcursion(e=e, half_length=(len(e) - 1) // 2, signs=signs)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_n1_unique():
    assert sample_excursion(1, rng_for(0)).tolist() == [0, 1, 0]


def test_sample_n2_unique():
    for seed in range(10):
        assert sample_excursion(2, rng_for(seed)).tolist() == [0, 1, 2, 1, 0]


def check_excursion_invariants(e):
    assert e[0] == 0 and e[-1] == 0
    assert np.all(np.abs(np.diff(e)) == 1)
    assert np.all(e[1:-1] > 0)


def test_sample_structural_invariants():
    rng = rng_for(1)
    for N in [1, 2, 3, 5, 17, 256, 4096]:
        e = sample_excursion(N, rng)
        assert len(e) == 2 * N + 1
        check_excursion_invariants(e)


def test_sample_n3_uniform():
    # two strictly positive walks of length 6, each with probability 1/2
    counts = {}
    rng = rng_for(2)
    reps = 20000
    for _ in range(reps):
        key = tuple(sample_excursion(3, rng).tolist())
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == {(0, 1, 2, 3, 2, 1, 0), (0, 1, 2, 1, 2, 1, 0)}
    for c in counts.values():
        assert abs(c - reps / 2) < 3 * math.sqrt(reps * 0.25)


def test_sample_n4_uniform():
    # Catalan(3) = 5 walks, each with probability 1/5
    counts = {}
    rng = rng_for(3)
    reps = 50000
    for _ in range(reps):
        key = tuple(sample_excursion(4, rng).tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 5
    sd = math.sqrt(reps * 0.2 * 0.8)
    for c in counts.values():
        assert abs(c - reps / 5) < 4 * sd


def test_sample_reproducible():
    a = sample_excursion(512, rng_for(9))
    b = sample_excursion(512, rng_for(9))
    assert np.array_equal(a, b)


def test_sample_rejects_bad_n():
    with pytest.raises(ValueError):
        sample_excursion(0, rng_for(0))


def test_sample_points_distinct_sorted():
    rng = rng_for(4)
    pts = sample_points(64, 60, rng)
    assert len(pts) == 60
    assert np.all(np.diff(pts) > 0)
    assert pts[0] >= 1 and pts[-1] <= 127
    with pytest.raises(ValueError):
        sample_points(4, 8, rng)


# ---------------------------------------------------------------------------
# signs
# ---------------------------------------------------------------------------


def scan_valleys(e):
    # independent oracle: descent step followed by ascent step
    out = []
    for k in range(1, len(e) - 1):
        if e[k - 1] > e[k] and e[k] < e[k + 1]:
            out.append(k)
    return out


def test_local_minima_matches_scan():
    rng = rng_for(5)
    for N in [2, 3, 9, 100, 1000]:
        e = sample_excursion(N, rng)
        assert local_minima(e).tolist() == scan_valleys(e)


def test_assign_signs_extremes():
    rng = rng_for(6)
    e = sample_excursion(200, rng)
    all_plus = assign_signs(e, 1.0, rng_for(0))
    all_minus = assign_signs(e, 0.0, rng_for(0))
    mins = scan_valleys(e)
    assert sorted(all_plus.signs) == mins
    assert sorted(all_minus.signs) == mins
    assert all(s == PLUS for s in all_plus.signs.values())
    assert all(s == MINUS for s in all_minus.signs.values())
    assert all_plus.half_length == 200


def test_assign_signs_law():
    rng = rng_for(7)
    total = plus = 0
    for _ in range(200):
        exc = excursion_for(100, 0.3, int(rng.integers(2**32)))
        vals = list(exc.signs.values())
        total += len(vals)
        plus += sum(1 for s in vals if s == PLUS)
    assert abs(plus / total - 0.3) < 3 * math.sqrt(0.3 * 0.7 / total)


def test_assign_signs_validates_heights():
    rng = rng_for(0)
    with pytest.raises(ValueError):
        assign_signs(np.array([0, 1, 1, 1, 0]), 0.5, rng)  # flat step
    with pytest.raises(ValueError):
        assign_signs(np.array([0, 1, 0, 1, 0]), 0.5, rng)  # touches zero
    with pytest.raises(ValueError):
        assign_signs(np.array([1, 2, 1]), 0.5, rng)  # bad endpoints
    with pytest.raises(ValueError):
        assign_signs(np.array([0, 1, 2, 1, 0]), 1.5, rng)  # bad p


# ---------------------------------------------------------------------------
# point trees
# ---------------------------------------------------------------------------


def naive_point_tree(exc, pts, lo_rank=1, vpos=None, vkey=None):
    """Independent recursive lowest-valley construction, as text."""
    if vpos is None:
        vpos = scan_valleys(exc.e)
        vkey = [exc.e[v] + exc.height_jitter.get(v, 0.0) for v in vpos]
    pts = [int(x) for x in pts]
    if len(pts) == 1:
        return str(lo_rank)
    lo, hi = pts[0], pts[-1]
    ptset = set(pts)
    a = bisect.bisect_right(vpos, lo)
    b = bisect.bisect_left(vpos, hi)
    best_v = best_key = None
    for idx in range(a, b):
        v = vpos[idx]
        if v in ptset:
            continue
        if best_key is None or vkey[idx] < best_key:
            best_key, best_v = vkey[idx], v
    if best_v is not None:
        gap = bisect.bisect_left(pts, best_v) - 1
        s = exc.signs.get(best_v, PLUS)
    else:
        m = lo + int(np.argmin(exc.e[lo:hi + 1]))
        j = bisect.bisect_left(pts, m)
        if j < len(pts) and pts[j] == m:
            gap = 0 if j == 0 else j - 1
        else:
            gap = j - 1
        s = exc.signs.get(m, PLUS)
    left = naive_point_tree(exc, pts[:gap + 1], lo_rank, vpos, vkey)
    right = naive_point_tree(exc, pts[gap + 1:], lo_rank + gap + 1, vpos, vkey)
    return "(" + left + "," + right + ")" + ("+" if s == PLUS else "-")


def test_cartesian_tree_single_point():
    exc = excursion_for(32, 0.5, 10)
    t = cartesian_tree(exc, [5])
    assert t.n == 1
    validate_tree(t)


def test_cartesian_tree_two_points():
    # hand-built W path: minimum between the two humps carries the sign
    e = np.array([0, 1, 2, 1, 2, 1, 0])
    exc = forced_signs(e, MINUS)
    assert list(exc.signs) == [3]
    t = cartesian_tree(exc, [2, 4])
    validate_tree(t)
    assert t.n == 2
    assert tree_to_text(t) == "(1,2)-"
    exc2 = forced_signs(e, PLUS)
    assert tree_to_text(cartesian_tree(exc2, [2, 4])) == "(1,2)+"


def test_cartesian_tree_rejects_bad_points():
    exc = excursion_for(16, 0.5, 11)
    with pytest.raises(ValueError):
        cartesian_tree(exc, [])
    with pytest.raises(ValueError):
        cartesian_tree(exc, [3, 3])
    with pytest.raises(ValueError):
        cartesian_tree(exc, [5, 4])
    with pytest.raises(ValueError):
        cartesian_tree(exc, [0, 4])
    with pytest.raises(ValueError):
        cartesian_tree(exc, [4, 32])


def test_cartesian_tree_matches_naive_oracle():
    rng = rng_for(12)
    for trial in range(1000):
        N = 4096
        exc = excursion_for(N, 0.5, 100000 + trial)
        k = int(rng.integers(2, 65))
        pts = sample_points(N, k, rng)
        fast = cartesian_tree(exc, pts)
        validate_tree(fast)
        assert tree_to_text(fast) == naive_point_tree(exc, pts)


def test_cartesian_tree_adjacent_points():
    # consecutive sample positions leave no interior minimum anywhere, so
    # every split takes the raw-argmin fallback; it must still be well
    # formed and agree with the oracle
    rng = rng_for(13)
    for trial in range(50):
        exc = excursion_for(64, 0.5, 200000 + trial)
        start = int(rng.integers(1, 120))
        pts = np.arange(start, start + 8)
        fast = cartesian_tree(exc, pts)
        validate_tree(fast)
        assert tree_to_text(fast) == naive_point_tree(exc, pts)


def test_perm_from_points_forced_signs():
    # widely spaced points always find an interior minimum, so every split
    # node carries a real coin and forced signs force the permutation
    rng = rng_for(14)
    e = sample_excursion(1024, rng)
    pts = np.arange(64, 64 * 13, 64)
    up = to_permutation(cartesian_tree(forced_signs(e, PLUS), pts))
    down = to_permutation(cartesian_tree(forced_signs(e, MINUS), pts))
    assert up.values.tolist() == list(range(1, 13))
    assert down.values.tolist() == list(range(12, 0, -1))


def test_perm_from_points_three_point_law():
    # the six length-3 patterns must follow the p^2 / p(1-p)/2 / (1-p)^2 law
    p = 0.4
    reps = 20000
    N = 4096
    rng = rng_for(15)
    counts = {}
    for _ in range(reps):
        e = sample_excursion(N, rng)
        exc = assign_signs(e, p, rng)
        pts = sample_points(N, 3, rng)
        key = tuple(perm_from_points(exc, pts).values.tolist())
        counts[key] = counts.get(key, 0) + 1
    q = 1 - p
    law = {
        (1, 2, 3): p * p,
        (3, 2, 1): q * q,
        (1, 3, 2): p * q / 2,
        (2, 1, 3): p * q / 2,
        (2, 3, 1): p * q / 2,
        (3, 1, 2): p * q / 2,
    }
    observed = [counts.get(k, 0) for k in law]
    expected = [reps * v for v in law.values()]
    stat, pvalue = stats.chisquare(observed, expected)
    assert pvalue > 1e-3, (dict(zip(law, observed)), expected)


# ---------------------------------------------------------------------------
# fragment traces
# ---------------------------------------------------------------------------


def flood_fill_length(e, t, h):
    # independent oracle: bracketing indices at or below level h
    l = t
    while e[l] > h:
        l -= 1
    r = t
    while e[r] > h:
        r += 1
    return r - l


def test_trace_unimodal_no_branchings():
    N = 8
    e = np.concatenate([np.arange(N + 1), np.arange(N - 1, -1, -1)])
    exc = forced_signs(e, PLUS)
    assert exc.signs == {}
    tr = fragment_trace(exc, N)
    assert np.all(tr.sign == 0)  # slope records only, no signed branchings
    assert tr.parent_num[0] == 2 * N  # full interval before anything splits
    assert np.all(np.diff(np.concatenate([[2 * N], tr.kept_num])) < 0)


def test_trace_rejects_boundary():
    exc = excursion_for(8, 0.5, 20)
    with pytest.raises(ValueError):
        fragment_trace(exc, 0)
    with pytest.raises(ValueError):
        fragment_trace(exc, 16)


def test_trace_structural_invariants():
    rng = rng_for(21)
    for trial in range(1000):
        exc = excursion_for(64, 0.5, 300000 + trial)
        t = int(rng.integers(1, 128))
        tr = fragment_trace(exc, t)
        n2 = 2 * exc.half_length
        # strictly decreasing lengths, chained parents
        lens = np.concatenate([[n2], tr.kept_num])
        assert np.all(np.diff(lens) < 0)
        assert np.array_equal(tr.parent_num, lens[:-1])
        # heights never decrease along the sweep
        assert np.all(np.diff(tr.height) >= 0)
        # the kept interval always brackets t
        l, r = 0, n2
        for k in tr.position.tolist():
            if k < t:
                l = k
            else:
                r = k
            assert l < t < r
        # signs agree with the excursion's coin map
        for k, s in zip(tr.position.tolist(), tr.sign.tolist()):
            assert s == exc.signs.get(k, 0)


def test_trace_reproduces_flood_fill():
    rng = rng_for(22)
    for trial in range(40):
        exc = excursion_for(1024, 0.5, 400000 + trial)
        t = int(rng.integers(1, 2048))
        tr = fragment_trace(exc, t)
        n2 = 2048
        cur = n2
        i = 0
        for h in range(int(exc.e[t])):
            while i < len(tr) and tr.height[i] <= h:
                cur = int(tr.kept_num[i])
                i += 1
            assert cur == flood_fill_length(exc.e, t, h), (trial, t, h)


# ---------------------------------------------------------------------------
# survival
# ---------------------------------------------------------------------------


def naive_survives(exc, t, eps):
    """Independent event walk over the materialized trace."""
    tr = fragment_trace(exc, t)
    n2 = 2 * exc.half_length
    if n2 <= eps * n2:
        return True
    for i in range(len(tr)):
        lost = int(tr.parent_num[i]) - int(tr.kept_num[i])
        if tr.sign[i] == MINUS and lost > int(tr.kept_num[i]):
            return False
        if int(tr.kept_num[i]) <= eps * n2:
            return True
    return True


def test_survives_eps_one_always():
    for seed in range(20):
        exc = excursion_for(128, 0.2, seed)
        t = 1 + (seed * 13) % 255
        assert survives_to_eps(exc, t, 1.0)


def test_survives_all_plus_always():
    rng = rng_for(23)
    for _ in range(20):
        e = sample_excursion(128, rng)
        exc = forced_signs(e, PLUS)
        t = int(rng.integers(1, 256))
        for eps in [1.0, 0.25, 1 / 64, 1 / 256]:
            assert survives_to_eps(exc, t, eps)
        assert survival_threshold(exc, t) == 0.0


def test_survives_rejects_bad_eps():
    exc = excursion_for(8, 0.5, 24)
    with pytest.raises(ValueError):
        survives_to_eps(exc, 3, 0.0)
    with pytest.raises(ValueError):
        survives_to_eps(exc, 3, 1.5)


def test_survives_matches_naive_walk():
    rng = rng_for(25)
    checked_kill = 0
    for trial in range(400):
        exc = excursion_for(256, 0.35, 500000 + trial)
        t = int(rng.integers(1, 512))
        tau = survival_threshold(exc, t)
        if tau > 0:
            checked_kill += 1
        for eps in [1.0, 0.5, 0.25, 1 / 16, 1 / 64, 1 / 512]:
            assert survives_to_eps(exc, t, eps) == naive_survives(exc, t, eps)
    assert checked_kill > 50  # the oracle saw plenty of discarding events


def test_survives_monotone_in_eps():
    rng = rng_for(26)
    grid = [1.0, 0.5, 0.25, 0.125, 1 / 32, 1 / 128]
    for trial in range(100):
        exc = excursion_for(512, 0.5, 600000 + trial)
        t = int(rng.integers(1, 1024))
        flags = [survives_to_eps(exc, t, eps) for eps in grid]
        # once False at some eps, stays False for all smaller eps
        for a, b in zip(flags, flags[1:]):
            assert a or not b


def test_threshold_direction_in_p():
    # more MINUS coins mean more discarding, so larger thresholds
    rng = rng_for(27)
    taus = {0.2: [], 0.8: []}
    for p in taus:
        for trial in range(300):
            exc = excursion_for(1024, p, 700000 + trial)
            t = int(rng.integers(1, 2048))
            taus[p].append(survival_threshold(exc, t))
    assert np.mean(taus[0.2]) > np.mean(taus[0.8])


def test_two_point_basic():
    exc = excursion_for(256, 0.5, 28)
    with pytest.raises(ValueError):
        two_point_survival(exc, 5, 5, 0.5)
    e = sample_excursion(256, rng_for(29))
    all_plus = forced_signs(e, PLUS)
    assert two_point_survival(all_plus, 10, 200, 1 / 64) == (True, True)
    a, b = two_point_survival(exc, 31, 401, 0.25)
    assert a == survives_to_eps(exc, 31, 0.25)
    assert b == survives_to_eps(exc, 401, 0.25)
