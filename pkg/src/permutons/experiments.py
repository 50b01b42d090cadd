"""
experiments.py
==============
Reproducible Monte-Carlo harness for the scaling behaviour of the samplers.

Four experiment kinds share one chunked, seed-stable execution scheme:

- lis_scaling:     mean longest increasing subsequence against leaf count,
                   log-log regression of the growth exponent.
- survival:        probability that a tagged excursion fragment shrinks to a
                   fraction eps before being discarded, against eps.
- two_point:       joint survival of two tagged positions on one excursion.
- cross_validate:  pattern frequencies of the direct tree sampler against
                   the excursion sampler, with chi-square comparisons.

Every trial owns a private generator seeded from (master_seed, kind, size
index, trial index), so results do not depend on how trials are scheduled
across workers.  Per-size results are accumulated as exact integers and
floats only appear in the final report, which makes the canonical JSON form
byte-identical across thread counts.  Wall-clock time is recorded on the
report object but deliberately kept out of the canonical serialization.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .excursion import (
    UNSIGNED,
    _record_positions,
    _threshold_from_records,
    local_minima,
    sample_excursion,
    sample_points,
)
from .exponents import exponent_table
from .trees import MINUS, PLUS, sample_tree, to_permutation

__all__ = [
    "LIS_SCALING",
    "SURVIVAL",
    "TWO_POINT",
    "CROSS_VALIDATE",
    "KINDS",
    "ExperimentConfig",
    "ExperimentReport",
    "loglog_regression",
    "run_lis_scaling",
    "run_survival_scaling",
    "run_two_point",
    "run_cross_validate",
    "run_experiment",
    "report_basename",
]

LIS_SCALING = "lis_scaling"
SURVIVAL = "survival"
TWO_POINT = "two_point"
CROSS_VALIDATE = "cross_validate"
KINDS = (LIS_SCALING, SURVIVAL, TWO_POINT, CROSS_VALIDATE)
_KIND_ID = {kind: i + 1 for i, kind in enumerate(KINDS)}

SCHEMA_VERSION = 1

# trials per work unit; a fixed value keeps the trial->chunk assignment (and
# hence every accumulator) independent of the worker count
_CHUNK = 256

# excursion half-length behind the cross-validation sampler
_CROSS_VALIDATE_HALF_LENGTH = 1 << 16

_PATTERNS = {
    n: list(itertools.permutations(range(1, n + 1))) for n in (3, 4)
}


# ---------------------------------------------------------------------------
# configuration and report types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Immutable description of one Monte-Carlo run.

    Attributes
    ----------
    kind : str          One of KINDS.
    p : float           Plus-sign probability, in (0, 1].  1 is allowed as
                        the degenerate all-plus limit used by sanity checks.
    sizes : tuple       Strictly increasing positive ints: leaf counts for
                        lis_scaling, the single excursion half-length for
                        survival/two_point, pattern lengths (3 and/or 4) for
                        cross_validate.
    reps : int          Trials per size, >= 1.
    eps_grid : tuple    Fragment fractions in (0, 1]; required for
                        survival/two_point, ignored otherwise.
    master_seed : int   64-bit seed; every trial derives its own generator
                        from (master_seed, kind, size index, trial index).
    threads : int       Worker budget hint; results never depend on it.
    """

    kind: str
    p: float
    sizes: tuple
    reps: int
    eps_grid: tuple = ()
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sizes",
                           tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "eps_grid",
                           tuple(float(x) for x in self.eps_grid))
        object.__setattr__(self, "p", float(self.p))
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.sizes:
            raise ValueError("sizes must be nonempty")
        if self.sizes[0] < 1:
            raise ValueError("sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        if any(not 0.0 < x <= 1.0 for x in self.eps_grid):
            raise ValueError("eps values must lie in (0, 1]")
        if self.kind in (SURVIVAL, TWO_POINT):
            if len(self.sizes) != 1:
                raise ValueError(
                    "survival experiments use a single half-length")
            if not self.eps_grid:
                raise ValueError("survival experiments need an eps grid")
        if self.kind == TWO_POINT and self.sizes[0] < 2:
            raise ValueError(
                "two-point survival needs at least two interior positions")
        if self.kind == CROSS_VALIDATE:
            if any(n not in _PATTERNS for n in self.sizes):
                raise ValueError(
                    "cross-validation covers pattern lengths 3 and 4")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class ExperimentReport:
    """
    Outcome of one run: per-size records, fit, and reference exponents.

    records hold dicts (n_or_eps, mean, sd, count); regression holds the
    log-log fit of mean against size (or eps) with a `defined` flag that
    degenerate configs switch off instead of crashing.  reference embeds
    the exponent-table values the slope should be compared against, making
    the report self-contained.  wall_clock (seconds) and the execution-only
    threads hint stay out of the canonical JSON so identical configs give
    byte-identical files regardless of scheduling.
    """

    config: ExperimentConfig
    records: list
    regression: dict
    reference: dict
    extra: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    partial: bool = False

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.config.kind,
            "config": {
                "kind": self.config.kind,
                "p": self.config.p,
                "sizes": list(self.config.sizes),
                "eps_grid": list(self.config.eps_grid),
                "reps": self.config.reps,
                "master_seed": int(self.config.master_seed),
            },
            "records": self.records,
            "regression": self.regression,
            "reference": self.reference,
            "extra": self.extra,
            "partial": self.partial,
        }

    def to_json(self):
        """Canonical JSON: sorted keys, two-space indent, no timing."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        """Per-size rows: kind, p, n_or_eps, mean, sd, count."""
        lines = ["kind,p,n_or_eps,mean,sd,count"]
        for rec in self.records:
            lines.append(",".join([
                self.config.kind,
                repr(self.config.p),
                repr(rec["n_or_eps"]),
                repr(rec["mean"]),
                repr(rec["sd"]),
                str(rec["count"]),
            ]))
        return "\n".join(lines) + "\n"


def report_basename(config):
    """File stem embedding the experiment kind, p, and master seed."""
    return f"{config.kind}_p{config.p:g}_seed{int(config.master_seed)}"


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------


def loglog_regression(points):
    """
    Ordinary least squares line through the given (x, y) points.

    Returns (slope, intercept, stderr of the slope, R^2) from the exact
    normal-equation formulas; the slope's standard error comes from the
    residual variance with n - 2 degrees of freedom and is 0.0 for a
    two-point fit.  Callers pass log-transformed values when fitting a
    power law.

    Raises ValueError on fewer than two points or all-equal x.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise ValueError("regression needs at least two points")
    xs = np.array([q[0] for q in pts])
    ys = np.array([q[1] for q in pts])
    if float(xs.max()) == float(xs.min()):
        raise ValueError("regression needs at least two distinct x values")
    n = len(pts)
    xbar = float(xs.mean())
    ybar = float(ys.mean())
    dx = xs - xbar
    sxx = float(dx @ dx)
    slope = float(dx @ (ys - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = ys - intercept - slope * xs
    ssr = float(resid @ resid)
    sst = float((ys - ybar) @ (ys - ybar))
    r_squared = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    stderr = 0.0 if n <= 2 else math.sqrt(max(ssr, 0.0) / ((n - 2) * sxx))
    return slope, intercept, stderr, r_squared


def _undefined_regression():
    return {"defined": False, "slope": None, "intercept": None,
            "stderr": None, "r_squared": None}


def _regression_from_records(records):
    """Log-log fit over records with positive mean; flagged when degenerate."""
    pts = [(math.log(rec["n_or_eps"]), math.log(rec["mean"]))
           for rec in records if rec["count"] > 0 and rec["mean"] > 0]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return _undefined_regression()
    slope, intercept, stderr, r_squared = loglog_regression(pts)
    return {"defined": True, "slope": slope, "intercept": intercept,
            "stderr": stderr, "r_squared": r_squared}


# ---------------------------------------------------------------------------
# reference exponents
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _reference_row(p):
    # p = 1 is the all-plus limit: nothing is ever discarded and the
    # growth exponents collapse to 1; the solvers only cover (0, 1)
    if p == 1.0:
        return {"p": 1.0, "alpha_star": 1.0, "beta_star": 1.0,
                "lambda_kill": 0.0, "lambda_lower": 0.0, "lambda_upper": 0.0}
    row = exponent_table([p]).rows[0]
    return {"p": row.p, "alpha_star": row.alpha_star,
            "beta_star": row.beta_star, "lambda_kill": row.lambda_kill,
            "lambda_lower": row.lambda_lower,
            "lambda_upper": row.lambda_upper}


def _reference_block(config):
    ref = dict(_reference_row(float(config.p)))
    if config.kind == LIS_SCALING:
        ref["target_slope_band"] = [ref["alpha_star"], ref["beta_star"]]
    elif config.kind == SURVIVAL:
        ref["target_slope"] = ref["lambda_lower"]
    elif config.kind == TWO_POINT:
        ref["target_slope"] = 2.0 * ref["lambda_lower"]
    return ref


# ---------------------------------------------------------------------------
# chunked execution
# ---------------------------------------------------------------------------


def _trial_rng(master_seed, kind_id, size_index, trial_index):
    seq = np.random.SeedSequence(
        (int(master_seed), kind_id, size_index, trial_index))
    return np.random.Generator(np.random.PCG64(seq))


def _chunk_ranges(reps):
    return [(lo, min(lo + _CHUNK, reps)) for lo in range(0, reps, _CHUNK)]


def _run_chunks(worker, tasks, threads):
    """
    Run chunk tasks and collect results in task order.

    Returns (results, completed).  An interrupt stops the collection and
    reports completed=False with whatever finished, so callers can flush a
    partial report.  Workers are separate processes; the merge step only
    ever adds integers, so the schedule cannot change any result.
    """
    results = []
    try:
        if threads <= 1 or len(tasks) <= 1:
            for task in tasks:
                results.append(worker(task))
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for res in pool.map(worker, tasks, chunksize=1):
                    results.append(res)
    except KeyboardInterrupt:
        return results, False
    return results, True


def _moment_record(key, total, total_sq, count):
    """Mean and sample SD from exact integer sums."""
    mean = total / count
    sd = 0.0
    if count > 1:
        var_num = count * total_sq - total * total
        if var_num > 0:
            sd = math.sqrt(var_num / (count * (count - 1)))
    return {"n_or_eps": key, "mean": mean, "sd": sd, "count": count}


# ---------------------------------------------------------------------------
# LIS scaling kernel: batched leaf-insertion sampling plus level-order DP
# ---------------------------------------------------------------------------


def _remy_batch(n, picks):
    """
    Grow B uniform tree shapes at once; row i mirrors sample_tree driven by
    the same uniforms (node 0 is the first leaf, step k allocates internal
    2k-1 and leaf 2k), so the two agree node for node.
    """
    B = picks.shape[0]
    size = 2 * n - 1
    left = np.full((B, size), -1, dtype=np.int32)
    right = np.full((B, size), -1, dtype=np.int32)
    parent = np.full((B, size), -1, dtype=np.int32)
    root = np.zeros(B, dtype=np.int32)
    rows = np.arange(B)
    for k in range(1, n):
        m = 2 * k - 1
        r = (picks[:, k - 1] * (2 * m)).astype(np.int32)
        v = r >> 1
        u = 2 * k - 1
        w = 2 * k
        pv = parent[rows, v]
        has = pv >= 0
        rh = rows[has]
        pvh = pv[has]
        was_left = left[rh, pvh] == v[has]
        left[rh[was_left], pvh[was_left]] = u
        right[rh[~was_left], pvh[~was_left]] = u
        root[~has] = u
        parent[rows, u] = pv
        new_left = (r & 1) == 0
        left[rows, u] = np.where(new_left, w, v)
        right[rows, u] = np.where(new_left, v, w)
        parent[rows, v] = u
        parent[rows, w] = u
    return left, right, root


def _sign_batch(n, coins, p):
    """Signs on the odd (internal) arena slots, PLUS with probability p."""
    B = coins.shape[0]
    sign = np.zeros((B, 2 * n - 1), dtype=np.int8)
    sign[:, 1::2] = np.where(coins < p, PLUS, MINUS)
    return sign


def _lis_batch(left, right, sign, root):
    """
    LIS of every tree in the batch: leaf 1, PLUS sum, MINUS max.

    A breadth-first sweep buckets all nodes of all trees by depth; the DP
    then runs one vectorized pass per level from the deepest up, so the
    per-node python cost of a tree walk disappears.
    """
    B, size = left.shape
    offset = np.arange(B, dtype=np.int64) * size
    lg = left.ravel()
    rg = right.ravel()
    sg = sign.ravel()
    frontier = root.astype(np.int64) + offset
    levels = [frontier]
    while True:
        ll = lg[frontier]
        internal = ll >= 0
        if not internal.any():
            break
        f = frontier[internal]
        base = (f // size) * size
        frontier = np.concatenate([lg[f] + base, rg[f] + base])
        levels.append(frontier)
    val = np.ones(B * size, dtype=np.int32)
    for level in reversed(levels):
        ll = lg[level]
        internal = ll >= 0
        if not internal.any():
            continue
        nodes = level[internal]
        base = (nodes // size) * size
        lv = val[lg[nodes] + base]
        rv = val[rg[nodes] + base]
        val[nodes] = np.where(sg[nodes] == PLUS, lv + rv,
                              np.maximum(lv, rv))
    return val[root.astype(np.int64) + offset]


def _lis_chunk(args):
    master_seed, size_index, n, p, lo, hi = args
    count = hi - lo
    if n == 1:
        return size_index, count, count, count
    kind_id = _KIND_ID[LIS_SCALING]
    # sub-batches bound the working set; they do not affect any trial
    sub = max(8, (1 << 23) // (2 * n - 1))
    total = 0
    total_sq = 0
    for start in range(lo, hi, sub):
        stop = min(start + sub, hi)
        B = stop - start
        picks = np.empty((B, n - 1))
        coins = np.empty((B, n - 1))
        for i in range(B):
            g = _trial_rng(master_seed, kind_id, size_index, start + i)
            picks[i] = g.random(n - 1)
            coins[i] = g.random(n - 1)
        left, right, root = _remy_batch(n, picks)
        sign = _sign_batch(n, coins, p)
        vals = _lis_batch(left, right, sign, root).astype(np.int64)
        total += int(vals.sum())
        total_sq += int((vals * vals).sum())
    return size_index, total, total_sq, count


# ---------------------------------------------------------------------------
# survival kernels: record-chain walks with lazily drawn coins
# ---------------------------------------------------------------------------


def _lazy_sign_of(e, p, g, memo=None):
    """
    Sign lookup that draws each coin the first time it is needed.

    Only strict local minima carry coins; slope records answer UNSIGNED
    exactly like the public signs map.  Laziness changes which coins are
    materialized but not their joint law, since every minimum's coin is an
    independent Bernoulli either way.  A shared memo makes two walks over
    the same excursion read consistent signs.
    """
    def sign_of(k):
        if not e[k - 1] > e[k] < e[k + 1]:
            return UNSIGNED
        if memo is None:
            return PLUS if g.random() < p else MINUS
        s = memo.get(k)
        if s is None:
            s = PLUS if g.random() < p else MINUS
            memo[k] = s
        return s
    return sign_of


def _survival_chunk(args):
    master_seed, size_index, N, p, eps, lo, hi = args
    kind_id = _KIND_ID[SURVIVAL]
    eps_arr = np.array(eps)
    hits = np.zeros(len(eps), dtype=np.int64)
    for trial in range(lo, hi):
        g = _trial_rng(master_seed, kind_id, size_index, trial)
        e = sample_excursion(N, g)
        t = int(g.integers(1, 2 * N))
        pos = _record_positions(e, t)
        tau = _threshold_from_records(e, t, pos, _lazy_sign_of(e, p, g))
        hits += tau <= eps_arr
    return size_index, hits.tolist(), hi - lo


def _two_point_chunk(args):
    master_seed, size_index, N, p, eps, lo, hi = args
    kind_id = _KIND_ID[TWO_POINT]
    eps_arr = np.array(eps)
    joint = np.zeros(len(eps), dtype=np.int64)
    first = np.zeros(len(eps), dtype=np.int64)
    second = np.zeros(len(eps), dtype=np.int64)
    for trial in range(lo, hi):
        g = _trial_rng(master_seed, kind_id, size_index, trial)
        e = sample_excursion(N, g)
        t1 = int(g.integers(1, 2 * N))
        t2 = int(g.integers(1, 2 * N))
        while t2 == t1:
            t2 = int(g.integers(1, 2 * N))
        sign_of = _lazy_sign_of(e, p, g, memo={})
        tau1 = _threshold_from_records(
            e, t1, _record_positions(e, t1), sign_of)
        tau2 = _threshold_from_records(
            e, t2, _record_positions(e, t2), sign_of)
        joint += max(tau1, tau2) <= eps_arr
        first += tau1 <= eps_arr
        second += tau2 <= eps_arr
    return size_index, joint.tolist(), first.tolist(), second.tolist(), hi - lo


# ---------------------------------------------------------------------------
# cross-validation kernel: lazy point patterns from a shared excursion
# ---------------------------------------------------------------------------


def _lazy_point_pattern(e, pts, p, g, signs=None, jitters=None):
    """
    Pattern of the excursion's point tree with draws made on demand.

    Follows the public split rule exactly: candidate minima strictly inside
    a block (sample positions excluded) compete by jittered height, and a
    candidate-free block falls back to the leftmost raw argmin over the
    closed span with PLUS at unsigned positions.  Jitters are compared only
    between minima tied at the lowest integer height, so just those and the
    winner's coin are drawn; the joint law matches materializing every draw
    up front.  Passing signs/jitters dicts pins the draws, which is how the
    tests check equivalence with the public path.

    Returns the pattern as a value tuple.
    """
    valleys = local_minima(e)
    n = len(pts)
    smemo = dict(signs) if signs is not None else {}
    jmemo = dict(jitters) if jitters is not None else {}

    def coin_at(v):
        s = smemo.get(v)
        if s is None:
            s = PLUS if g.random() < p else MINUS
            smemo[v] = s
        return s

    def jitter_at(v):
        j = jmemo.get(v)
        if j is None:
            j = float(g.random())
            jmemo[v] = j
        return j

    def build(i, j):
        if i == j:
            return (1,)
        a = int(np.searchsorted(valleys, pts[i], side="right"))
        b = int(np.searchsorted(valleys, pts[j], side="left"))
        sub = valleys[a:b]
        if len(sub):
            sub = sub[~np.isin(sub, pts)]
        if len(sub):
            heights = e[sub]
            ties = sub[heights == heights.min()]
            if len(ties) == 1:
                v = int(ties[0])
            else:
                v = min((int(x) for x in ties),
                        key=lambda x: (jitter_at(x), x))
            k = int(np.searchsorted(pts, v)) - 1
            s = coin_at(v)
        else:
            lo, hi = int(pts[i]), int(pts[j])
            m = lo + int(np.argmin(e[lo:hi + 1]))
            ins = int(np.searchsorted(pts, m, side="left"))
            if ins < n and pts[ins] == m:
                k = i if ins == i else ins - 1
            else:
                k = ins - 1
            if 0 < m < len(e) - 1 and e[m - 1] > e[m] < e[m + 1]:
                s = coin_at(m)
            else:
                s = PLUS
        left_vals = build(i, k)
        right_vals = build(k + 1, j)
        if s == PLUS:
            return left_vals + tuple(x + len(left_vals) for x in right_vals)
        return tuple(x + len(right_vals) for x in left_vals) + right_vals

    return build(0, n - 1)


def _cross_validate_chunk(args):
    master_seed, size_index, n, p, lo, hi = args
    kind_id = _KIND_ID[CROSS_VALIDATE]
    index = {pat: i for i, pat in enumerate(_PATTERNS[n])}
    tree_counts = np.zeros(len(index), dtype=np.int64)
    exc_counts = np.zeros(len(index), dtype=np.int64)
    N = _CROSS_VALIDATE_HALF_LENGTH
    for trial in range(lo, hi):
        g = _trial_rng(master_seed, kind_id, size_index, trial)
        tree = sample_tree(n, p, g)
        pat = tuple(int(x) for x in to_permutation(tree).values)
        tree_counts[index[pat]] += 1
        e = sample_excursion(N, g)
        pts = sample_points(N, n, g)
        exc_counts[index[_lazy_point_pattern(e, pts, p, g)]] += 1
    return size_index, tree_counts.tolist(), exc_counts.tolist(), hi - lo


def _exact_three_point_law(p):
    """Pattern probabilities at n = 3: p^2, four cells of p(1-p)/2, (1-p)^2."""
    q = 1.0 - p
    cell = p * q / 2.0
    law = {(1, 2, 3): p * p, (3, 2, 1): q * q}
    probs = [law.get(pat, cell) for pat in _PATTERNS[3]]
    return probs


def _chi_square_two_sample(counts_a, counts_b):
    """Chi-square test that two multinomial count vectors share one law."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    na = a.sum()
    nb = b.sum()
    keep = (a + b) > 0
    a = a[keep]
    b = b[keep]
    ka = math.sqrt(nb / na)
    kb = math.sqrt(na / nb)
    stat = float((((ka * a - kb * b) ** 2) / (a + b)).sum())
    dof = int(keep.sum()) - 1
    pvalue = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return stat, dof, pvalue


def _chi_square_vs_law(counts, probs):
    """Chi-square test of observed counts against exact cell probabilities."""
    obs = np.asarray(counts, dtype=float)
    expected = obs.sum() * np.asarray(probs, dtype=float)
    keep = expected > 0
    stat = float((((obs[keep] - expected[keep]) ** 2) / expected[keep]).sum())
    if np.any(obs[~keep] > 0):
        stat = math.inf
    dof = int(keep.sum()) - 1
    pvalue = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return stat, dof, pvalue


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_lis_scaling(config):
    """
    Mean LIS against leaf count with a log-log growth fit.

    For each size, reps trees are drawn by the leaf-insertion sampler and
    their LIS measured by the tree DP (a batched kernel that agrees with
    sample_tree / lis_tree node for node); the regression fits log mean
    against log n.  Degenerate configs (single size, reps too small) yield
    a report whose regression is flagged undefined.
    """
    if config.kind != LIS_SCALING:
        raise ValueError("config.kind must be lis_scaling")
    t0 = time.perf_counter()
    reference = _reference_block(config)
    tasks = [(config.master_seed, si, n, config.p, lo, hi)
             for si, n in enumerate(config.sizes)
             for lo, hi in _chunk_ranges(config.reps)]
    results, completed = _run_chunks(_lis_chunk, tasks, config.threads)
    sums = [0] * len(config.sizes)
    sums_sq = [0] * len(config.sizes)
    counts = [0] * len(config.sizes)
    for si, total, total_sq, count in results:
        sums[si] += total
        sums_sq[si] += total_sq
        counts[si] += count
    records = [_moment_record(n, sums[si], sums_sq[si], counts[si])
               for si, n in enumerate(config.sizes) if counts[si] > 0]
    return ExperimentReport(
        config=config,
        records=records,
        regression=_regression_from_records(records),
        reference=reference,
        wall_clock=time.perf_counter() - t0,
        partial=not completed,
    )


def _run_survival_like(config, kind, worker):
    t0 = time.perf_counter()
    reference = _reference_block(config)
    N = config.sizes[0]
    tasks = [(config.master_seed, 0, N, config.p, config.eps_grid, lo, hi)
             for lo, hi in _chunk_ranges(config.reps)]
    results, completed = _run_chunks(worker, tasks, config.threads)
    m = len(config.eps_grid)
    joint = [0] * m
    first = [0] * m
    second = [0] * m
    count = 0
    for res in results:
        if kind == SURVIVAL:
            _, hits, c = res
            for j in range(m):
                joint[j] += hits[j]
        else:
            _, hits, h1, h2, c = res
            for j in range(m):
                joint[j] += hits[j]
                first[j] += h1[j]
                second[j] += h2[j]
        count += c
    records = []
    if count > 0:
        for j, eps in enumerate(config.eps_grid):
            records.append(_moment_record(eps, joint[j], joint[j], count))
    extra = {}
    if kind == TWO_POINT and count > 0:
        extra = {
            "single_first": [first[j] / count for j in range(m)],
            "single_second": [second[j] / count for j in range(m)],
        }
    return ExperimentReport(
        config=config,
        records=records,
        regression=_regression_from_records(records),
        reference=reference,
        extra=extra,
        wall_clock=time.perf_counter() - t0,
        partial=not completed,
    )


def run_survival_scaling(config):
    """
    Tagged-fragment survival frequency per eps with a log-log fit.

    Each trial draws a fresh excursion of the configured half-length and a
    fresh uniform interior tag; its survival threshold is evaluated against
    the whole eps grid at once, which also makes the estimated curve
    exactly monotone in eps.  The reported slope estimates the survival
    exponent (reference: lambda_lower).
    """
    if config.kind != SURVIVAL:
        raise ValueError("config.kind must be survival")
    return _run_survival_like(config, SURVIVAL, _survival_chunk)


def run_two_point(config):
    """
    Joint survival of two distinct uniform tags on one excursion per eps.

    Both walks read one consistent lazy sign assignment, matching the
    public two-point op; the mean column is the joint frequency and the
    two marginal frequencies land in extra.  Reference slope: twice
    lambda_lower.
    """
    if config.kind != TWO_POINT:
        raise ValueError("config.kind must be two_point")
    return _run_survival_like(config, TWO_POINT, _two_point_chunk)


def run_cross_validate(config):
    """
    Pattern-frequency agreement between the two samplers.

    For each configured pattern length (3 and/or 4), reps patterns are
    drawn from the direct tree sampler and from the excursion sampler
    (half-length 2^16) and compared by chi-square: the two samplers against
    each other, and each against the exact law at length 3.  Per-size
    records carry the between-sampler p-value in the mean column; the full
    count vectors and statistics live in extra.
    """
    if config.kind != CROSS_VALIDATE:
        raise ValueError("config.kind must be cross_validate")
    t0 = time.perf_counter()
    reference = _reference_block(config)
    tasks = [(config.master_seed, si, n, config.p, lo, hi)
             for si, n in enumerate(config.sizes)
             for lo, hi in _chunk_ranges(config.reps)]
    results, completed = _run_chunks(
        _cross_validate_chunk, tasks, config.threads)
    tree_counts = {n: [0] * len(_PATTERNS[n]) for n in config.sizes}
    exc_counts = {n: [0] * len(_PATTERNS[n]) for n in config.sizes}
    counts = {n: 0 for n in config.sizes}
    for si, tc, ec, c in results:
        n = config.sizes[si]
        for i, x in enumerate(tc):
            tree_counts[n][i] += x
        for i, x in enumerate(ec):
            exc_counts[n][i] += x
        counts[n] += c
    records = []
    per_size = {}
    for n in config.sizes:
        if counts[n] == 0:
            continue
        stat, dof, pvalue = _chi_square_two_sample(
            tree_counts[n], exc_counts[n])
        block = {
            "patterns": ["".join(str(v) for v in pat)
                         for pat in _PATTERNS[n]],
            "tree_counts": tree_counts[n],
            "excursion_counts": exc_counts[n],
            "chi2_between": stat,
            "dof_between": dof,
            "pvalue_between": pvalue,
        }
        if n == 3:
            law = _exact_three_point_law(config.p)
            block["exact_law"] = law
            for name, row in (("tree", tree_counts[3]),
                              ("excursion", exc_counts[3])):
                stat_l, dof_l, p_l = _chi_square_vs_law(row, law)
                block[f"chi2_{name}_vs_exact"] = stat_l
                block[f"dof_{name}_vs_exact"] = dof_l
                block[f"pvalue_{name}_vs_exact"] = p_l
        per_size[str(n)] = block
        records.append({"n_or_eps": n, "mean": pvalue, "sd": 0.0,
                        "count": counts[n]})
    return ExperimentReport(
        config=config,
        records=records,
        regression=_undefined_regression(),
        reference=reference,
        extra={"per_size": per_size},
        wall_clock=time.perf_counter() - t0,
        partial=not completed,
    )


_RUNNERS = {
    LIS_SCALING: run_lis_scaling,
    SURVIVAL: run_survival_scaling,
    TWO_POINT: run_two_point,
    CROSS_VALIDATE: run_cross_validate,
}


def run_experiment(config):
    """Dispatch the config to the runner for its kind."""
    return _RUNNERS[config.kind](config)
