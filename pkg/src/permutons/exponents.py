"""
exponents.py
============
Scaling exponents of the size-biased fragmentation attached to signed
excursions.

The interval fragmentation of a positive excursion, followed along a tagged
uniform point, is governed by a subordinator whose Levy measure has density

    2 e^x / sqrt(2 pi (e^x - 1)^3)          on (0, oo),

with Laplace exponent

    phi(q) = 2 sqrt(2) Gamma(q + 1/2) / Gamma(q),

finite for q > -1/2.  Two exponents control how often a tagged fragment
survives a sign-driven selection down to size eps:

* ``lambda_star_lower(p)`` -- the root of phi_S(-lam) = -lambda_kill(p),
  where phi_S is the Laplace exponent of the subordinator thinned by the
  selection rule and lambda_kill(p) is the rate of fatal minus-branchings.
  ``alpha_star = 1 - lambda_star_lower`` is the growth exponent of the
  longest increasing subsequence (equivalently, largest clique).
* ``lambda_star_upper(p)`` -- a sup-min over a branching-balance parameter
  beta, a duration parameter delta and a tilt gamma < 0, built on the root
  ``kappa_star(p, gamma, r)``.  ``beta_star = 1 - lambda_star_upper`` is the
  complementary upper-bound exponent.

All root-finding targets an absolute residual below 1e-10 so that downstream
tables are reproducible to the digit.
"""

from __future__ import annotations

import csv
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

__all__ = [
    "LEVY_PREFACTOR",
    "levy_tail",
    "phi",
    "phi_S",
    "lambda_kill",
    "lambda_star_lower",
    "kappa_star",
    "lambda_star_upper",
    "UpperExponentResult",
    "ExponentRow",
    "ExponentTable",
    "exponent_table",
    "EXPONENT_CSV_COLUMNS",
    "write_exponent_csv",
    "write_exponent_json",
]

# 2 sqrt(2/pi): levy_tail(a, oo) = LEVY_PREFACTOR / sqrt(e^a - 1).
LEVY_PREFACTOR = 2.0 * math.sqrt(2.0 / math.pi)

_HALF = 0.5
# Upper bisection bound for kappa in (0, 1/2); phi(-kappa) ~ -8e12 there,
# far beyond any right-hand side this module produces.
_KAPPA_HI = 0.5 - 1e-13


# ====================================================================== #
# Levy measure and Laplace exponents                                     #
# ====================================================================== #

def levy_tail(a, b=math.inf):
    """
    Integral of the Levy density 2 e^x / sqrt(2 pi (e^x - 1)^3) over (a, b).

    Uses the closed-form antiderivative -2 sqrt(2/pi) (e^x - 1)^(-1/2).
    Accepts scalars or numpy arrays (broadcast).

    Parameters
    ----------
    a : float or array   Lower endpoint, must be > 0 (the measure has an
                         infinite mass near 0).
    b : float or array   Upper endpoint, must satisfy b > a; +inf allowed.

    Returns
    -------
    float or ndarray     Mass of (a, b).
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr <= 0.0):
        raise ValueError("levy_tail: lower endpoint must be > 0")
    if np.any(b_arr <= a_arr):
        raise ValueError("levy_tail: need b > a")
    lower = 1.0 / np.sqrt(np.expm1(a_arr))
    upper = np.where(np.isinf(b_arr), 0.0, 1.0 / np.sqrt(np.expm1(b_arr)))
    out = LEVY_PREFACTOR * (lower - upper)
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out)
    return out


def _log_abs_gamma_ratio(q):
    """log |Gamma(q + 1/2) / Gamma(q)| for q > -1/2 (array-safe)."""
    return gammaln(q + _HALF) - gammaln(q)


def phi(q):
    """
    Laplace exponent phi(q) = 2 sqrt(2) Gamma(q + 1/2) / Gamma(q).

    Equals the integral of (1 - e^(-q x)) against the Levy density, finite
    exactly for q > -1/2.  phi(0) = 0 is returned exactly; the sign of
    Gamma(q) < 0 on (-1/2, 0) is tracked explicitly, making phi negative
    there.  Accepts scalars or numpy arrays.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr <= -_HALF):
        raise ValueError("phi: requires q > -1/2")
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = 2.0 * math.sqrt(2.0) * np.exp(_log_abs_gamma_ratio(q_arr))
    # Gamma(q) < 0 exactly on (-1/2, 0) within the admissible range.
    sign = np.where(q_arr < 0.0, -1.0, 1.0)
    out = np.where(q_arr == 0.0, 0.0, sign * mag)
    if np.ndim(q) == 0:
        return float(out)
    return out


def _phi_of_minus(kappa):
    """phi(-kappa) for kappa in [0, 1/2), vectorized without sign lookups."""
    kappa = np.asarray(kappa, dtype=float)
    with np.errstate(divide="ignore"):
        out = -2.0 * math.sqrt(2.0) * np.exp(
            gammaln(_HALF - kappa) - gammaln(-kappa)
        )
    # gammaln(-0) = +inf makes the exponential vanish, so kappa == 0 already
    # evaluates to -0.0; normalize to exact zero.
    return np.where(kappa == 0.0, 0.0, out)


def _tail_weight_integral(q):
    """
    Integral of e^(-q x) against the Levy density over (log 2, oo).

    The substitution u = (e^x - 1)^(-1/2) flattens the Levy density to the
    constant 2 sqrt(2/pi) on u in (0, 1), leaving

        2 sqrt(2/pi) * int_0^1 u^(2q) (1 + u^2)^(-q) du.

    The endpoint singularity u^(2q) for q < 0 is handled by quad's algebraic
    weighting.  Returns (value, abserr).
    """
    if q <= -_HALF:
        raise ValueError("tail integral diverges for q <= -1/2")
    val, err = quad(
        lambda u: (1.0 + u * u) ** (-q),
        0.0,
        1.0,
        weight="alg",
        wvar=(2.0 * q, 0.0),
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return LEVY_PREFACTOR * val, LEVY_PREFACTOR * err


def phi_S(p, q, *, quad_tol=1e-10):
    """
    Laplace exponent of the selection-thinned subordinator.

    The selection rule keeps every jump of size <= log 2 and keeps larger
    jumps independently with probability p, so

        phi_S(p, q) = phi(q) - (1 - p) * int_(log 2)^oo (1 - e^(-q x)) L(dx).

    The tail integral is evaluated by adaptive quadrature after the
    flattening substitution u = (e^x - 1)^(-1/2); an estimated quadrature
    error above ``quad_tol`` raises ArithmeticError.

    Parameters
    ----------
    p : float    Keep-probability for large jumps, in [0, 1].
    q : float    Argument, must be > -1/2.

    Returns
    -------
    float
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("phi_S: p must lie in [0, 1]")
    if q <= -_HALF:
        raise ValueError("phi_S: requires q > -1/2")
    if q == 0.0:
        return 0.0
    if p == 1.0:
        return phi(q)
    tail_mass = LEVY_PREFACTOR  # levy_tail(log 2, oo) exactly
    weight, err = _tail_weight_integral(q)
    # The integral blows up like 1/(2q + 1) near q = -1/2, so the target is
    # absolute for O(1) values and relative once the value itself is large.
    if err > quad_tol * max(1.0, abs(weight)):
        raise ArithmeticError(
            f"phi_S: quadrature error {err:.3e} above {quad_tol:.1e}"
        )
    return phi(q) - (1.0 - p) * (tail_mass - weight)


# ====================================================================== #
# Exponent roots                                                         #
# ====================================================================== #

def lambda_kill(p):
    """
    Rate 2 (1 - p) sqrt(2/pi) of fatal minus-branchings along the tagged
    fragment; equals (1 - p) * levy_tail(log 2, oo).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("lambda_kill: p must lie in [0, 1]")
    return (1.0 - p) * LEVY_PREFACTOR


def _solve_lambda_lower(p):
    """Bisection for the root of phi_S(-lam) = -lambda_kill(p); returns
    (root, residual, iterations)."""
    if not 0.0 < p < 1.0:
        raise ValueError("lambda_star_lower: p must lie strictly in (0, 1)")
    kill = lambda_kill(p)

    def g(lam):
        return phi_S(p, -lam) + kill

    lo, hi = 0.0, _HALF - 1e-9
    g_lo, g_hi = kill, g(hi)
    if not (g_lo > 0.0 > g_hi):
        raise ArithmeticError(
            "lambda_star_lower: no sign change on (0, 1/2); "
            f"g(lo)={g_lo:.3e}, g(hi)={g_hi:.3e}"
        )
    iterations = 0
    mid, g_mid = lo, g_lo
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        iterations += 1
        if abs(g_mid) < 1e-10:
            return mid, abs(g_mid), iterations
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return mid, abs(g(mid)), iterations


def lambda_star_lower(p):
    """
    Survival exponent lambda in (0, 1/2) solving phi_S(-lam) = -lambda_kill(p).

    The map lam -> phi_S(-lam) + lambda_kill(p) is strictly decreasing from
    lambda_kill(p) > 0 to -oo on (0, 1/2), so the root is unique; it is
    bracketed by bisection down to |residual| < 1e-10 or width < 1e-12.
    The increasing-subsequence exponent is alpha_star = 1 - lambda_star_lower.
    Requires p strictly inside (0, 1).
    """
    root, _, _ = _solve_lambda_lower(p)
    return root


def _phi_neg_inverse(y, iterations=64):
    """
    Solve phi(-kappa) = -y for kappa in [0, 1/2), vectorized.

    phi(-kappa) decreases strictly from 0 to -oo as kappa runs over
    [0, 1/2), so the root exists and is unique for every y >= 0.  Plain
    bisection; 64 halvings shrink the bracket to ~3e-20, far below float
    resolution, so the returned root is machine-accurate.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0.0):
        raise ValueError("phi_neg_inverse: requires y >= 0")
    lo = np.zeros_like(y_arr)
    hi = np.full_like(y_arr, _KAPPA_HI)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = _phi_of_minus(mid) + y_arr > 0.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = np.where(y_arr == 0.0, 0.0, 0.5 * (lo + hi))
    if np.ndim(y) == 0:
        return float(out)
    return out


def _minus_tail_mass(p, beta):
    """
    Mass assigned by the minus-branching Levy measure (1 - p) L to jumps in
    (beta, -log(1 - e^(-beta))) -- the window of unbalanced branchings when
    the balance ratio is r = e^(-beta).  Array-safe in beta.
    """
    beta_arr = np.asarray(beta, dtype=float)
    upper = -np.log(-np.expm1(-beta_arr))
    out = (1.0 - p) * levy_tail(beta_arr, upper)
    if np.ndim(beta) == 0:
        return float(out)
    return out


def kappa_star(p, gamma, r):
    """
    Root kappa in (0, 1/2) of

        phi(-kappa) = -(1 - e^gamma) * (1 - p) * L(-log r, -log(1 - r)),

    where L is the Levy tail integral; the right-hand side is the tilted
    rate of minus-branchings whose balance ratio lies in (1 - r, r).

    Parameters
    ----------
    p : float      Plus-sign probability in [0, 1].
    gamma : float  Exponential tilt, must be < 0.
    r : float      Balance threshold, must lie in (1/2, 1).

    Returns
    -------
    float          kappa_star; 0.0 exactly when the right side vanishes
                   (p = 1).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("kappa_star: p must lie in [0, 1]")
    if gamma >= 0.0:
        raise ValueError("kappa_star: gamma must be < 0")
    if not 0.5 < r < 1.0:
        raise ValueError("kappa_star: r must lie in (1/2, 1)")
    beta = -math.log(r)
    rhs = (1.0 - math.exp(gamma)) * _minus_tail_mass(p, beta)
    return _phi_neg_inverse(rhs)


@dataclass
class UpperExponentResult:
    """Optimizer record for ``lambda_star_upper``."""

    value: float
    beta_hat: float
    delta_hat: float
    gamma_hat: float
    kappa_hat: float
    residual_kappa: float
    grid_value: float
    refine_iterations: int

    def __float__(self):
        return self.value


def _inner_crossing_rate(p, beta, s_lo, s_hi, seeds=64, iters=60):
    """
    For fixed beta, maximize kappa_star(p, gamma, e^(-beta)) / (beta - gamma)
    over gamma = -e^s with s in [s_lo, s_hi].

    The quantity maximized is the delta-value at which the line beta*delta
    crosses the decreasing envelope sup_gamma (gamma delta + kappa); the
    sup-min over delta for this beta equals beta times this maximum.
    No concavity is assumed: the bracket is scanned at ``seeds`` points
    first, then refined by golden-section.  Returns (ratio, s_at_max).
    """
    mass = _minus_tail_mass(p, beta)

    def ratio(s):
        gam = -np.exp(s)
        kap = _phi_neg_inverse(-np.expm1(gam) * mass)
        return kap / (beta - gam)

    s_grid = np.linspace(s_lo, s_hi, seeds)
    vals = ratio(s_grid)
    k = int(np.argmax(vals))
    a = s_grid[max(k - 1, 0)]
    b = s_grid[min(k + 1, seeds - 1)]

    inv_gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_gr * (b - a)
    d = a + inv_gr * (b - a)
    f_c, f_d = ratio(c), ratio(d)
    for _ in range(iters):
        if f_c > f_d:
            b, d, f_d = d, c, f_c
            c = b - inv_gr * (b - a)
            f_c = ratio(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + inv_gr * (b - a)
            f_d = ratio(d)
    s_best = 0.5 * (a + b)
    return float(ratio(s_best)), float(s_best)


_S_LO, _S_HI = -30.0, 5.0


def _upper_seed_tables(p, beta, s_seeds):
    """Seed-resolution kappa table -> (kappa[s, b], gammas)."""
    gammas = -np.exp(s_seeds)
    mass = _minus_tail_mass(p, beta)
    y = (-np.expm1(gammas))[:, None] * mass[None, :]
    return _phi_neg_inverse(y), gammas


def lambda_star_upper(p, *, beta_points=64, delta_points=64, gamma_seeds=64,
                      full_output=False):
    """
    Sup-min exponent

        sup over beta in (0, log 2), delta > 0 of
            min( beta delta,
                 sup over gamma < 0 of gamma delta + kappa_star(p, gamma, e^(-beta)) ).

    The cograph upper-bound exponent is beta_star = 1 - lambda_star_upper.

    Strategy: a coarse grid over (beta, delta) with the inner sup scanned at
    ``gamma_seeds`` seed points (gamma = -e^s, s in [-30, 5]) locates the
    optimum; derivative-free refinement then exploits the crossing structure
    in delta -- for fixed beta the min is maximized where beta delta meets
    the decreasing inner envelope, at delta* = sup_gamma kappa / (beta -
    gamma) -- so the outer problem reduces to a golden-section search in
    beta with a nested scanned-then-refined search in gamma.

    Requires p strictly inside (0, 1).  Returns a float, or an
    ``UpperExponentResult`` when ``full_output`` is true.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("lambda_star_upper: p must lie strictly in (0, 1)")

    log2 = math.log(2.0)
    betas = log2 * np.arange(1, beta_points + 1) / (beta_points + 1)
    deltas = np.logspace(-3.0, 3.0, delta_points)
    s_seeds = np.linspace(_S_LO, _S_HI, gamma_seeds)

    kappa_tab, gammas = _upper_seed_tables(p, betas, s_seeds)

    # Coarse sup-min over the full (gamma-seed, beta, delta) grid.
    inner = gammas[:, None, None] * deltas[None, None, :] + kappa_tab[:, :, None]
    inner_sup = inner.max(axis=0)                     # (beta, delta)
    grid_vals = np.minimum(betas[:, None] * deltas[None, :], inner_sup)
    grid_value = float(grid_vals.max())

    # Seed-resolution crossing values pick the refinement bracket in beta.
    # Seed-resolution crossing values underestimate v(beta) non-uniformly,
    # so the true argmax can sit past the +-1 neighbor; bracket by +-2.
    ratios = kappa_tab / (betas[None, :] - gammas[:, None])
    v_seed = betas * ratios.max(axis=0)
    k = int(np.argmax(v_seed))
    a = betas[k - 2] if k > 1 else 0.5 * betas[0]
    b = betas[k + 2] if k < beta_points - 2 else 0.5 * (betas[-1] + log2)

    def crossing_value(beta):
        ratio, s_best = _inner_crossing_rate(p, beta, _S_LO, _S_HI,
                                             seeds=gamma_seeds)
        return beta * ratio, s_best

    inv_gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_gr * (b - a)
    d = a + inv_gr * (b - a)
    f_c, _ = crossing_value(c)
    f_d, _ = crossing_value(d)
    refine_iterations = 2
    for _ in range(48):
        if f_c > f_d:
            b, d, f_d = d, c, f_c
            c = b - inv_gr * (b - a)
            f_c, _ = crossing_value(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + inv_gr * (b - a)
            f_d, _ = crossing_value(d)
        refine_iterations += 1
        if b - a < 1e-11:
            break

    beta_hat = 0.5 * (a + b)
    refined_value, s_hat = crossing_value(beta_hat)
    value = max(refined_value, grid_value)
    if refined_value < grid_value:
        # The coarse grid is a pointwise lower bound of the true sup, so a
        # real gap means the bracket missed the optimum.
        gap = grid_value - refined_value
        if gap > 1e-6 * max(grid_value, 1e-12):
            raise ArithmeticError(
                f"lambda_star_upper: refinement lost the optimum (gap {gap:.3e})"
            )

    gamma_hat = -math.exp(s_hat)
    delta_hat = refined_value / beta_hat
    r_hat = math.exp(-beta_hat)
    kappa_hat = kappa_star(p, gamma_hat, r_hat) if p < 1.0 else 0.0
    residual = abs(
        phi(-kappa_hat)
        + (1.0 - math.exp(gamma_hat)) * _minus_tail_mass(p, beta_hat)
    )

    result = UpperExponentResult(
        value=float(value),
        beta_hat=float(beta_hat),
        delta_hat=float(delta_hat),
        gamma_hat=float(gamma_hat),
        kappa_hat=float(kappa_hat),
        residual_kappa=float(residual),
        grid_value=grid_value,
        refine_iterations=refine_iterations,
    )
    if full_output:
        return result
    return result.value


def _lambda_upper_seed_estimates(ps, beta_points=64, gamma_seeds=256):
    """
    Vectorized seed-resolution estimate of lambda_star_upper for an array of
    p values; used by wide-grid monotonicity checks where the full optimizer
    would be too slow.  Accuracy is limited by the seed grids (~1e-4).
    """
    ps = np.asarray(ps, dtype=float)
    log2 = math.log(2.0)
    betas = log2 * np.arange(1, beta_points + 1) / (beta_points + 1)
    s_seeds = np.linspace(_S_LO, _S_HI, gamma_seeds)
    gammas = -np.exp(s_seeds)
    base_mass = _minus_tail_mass(0.0, betas)          # (beta,)
    y = (-np.expm1(gammas))[:, None, None] * base_mass[None, :, None] \
        * (1.0 - ps)[None, None, :]                   # (s, beta, p)
    # kappa depends on the tensor only through the scalar rate y, so solve
    # once on a dense 1-d grid and interpolate; the root map is concave in
    # y, so linear interpolation keeps the estimate a lower bound.
    y_grid = np.geomspace(y.min(), y.max(), 4096)
    kappa = np.interp(y, y_grid, _phi_neg_inverse(y_grid))
    ratios = kappa / (betas[None, :, None] - gammas[:, None, None])
    return (betas[None, :, None] * ratios).max(axis=(0, 1))


# ====================================================================== #
# Tables and serialization                                               #
# ====================================================================== #

EXPONENT_CSV_COLUMNS = [
    "p",
    "lambda_kill",
    "lambda_lower",
    "alpha_star",
    "lambda_upper",
    "beta_star",
    "beta_hat",
    "delta_hat",
    "gamma_hat",
    "residual_lower",
    "residual_kappa",
]

SCHEMA_VERSION = 1


@dataclass
class ExponentRow:
    """One p-slice of the exponent table."""

    p: float
    lambda_kill: float
    lambda_lower: float
    alpha_star: float
    lambda_upper: float
    beta_star: float
    beta_hat: float
    delta_hat: float
    gamma_hat: float
    residual_lower: float
    residual_kappa: float
    lower_iterations: int
    upper_iterations: int


@dataclass
class ExponentTable:
    """Exponent rows for a grid of sign probabilities."""

    rows: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def row_for(self, p):
        for row in self.rows:
            if row.p == p:
                return row
        raise KeyError(f"no row for p={p!r}")


def exponent_table(ps):
    """
    Compute all exponents for each sign probability in ``ps``.

    Each row records lambda_kill, the lower/upper survival exponents with
    their optimizer diagnostics, and the derived growth exponents
    alpha_star = 1 - lambda_lower and beta_star = 1 - lambda_upper.
    Every p must lie strictly in (0, 1).
    """
    rows = []
    for p in ps:
        p = float(p)
        lower, res_lower, it_lower = _solve_lambda_lower(p)
        upper = lambda_star_upper(p, full_output=True)
        rows.append(
            ExponentRow(
                p=p,
                lambda_kill=lambda_kill(p),
                lambda_lower=lower,
                alpha_star=1.0 - lower,
                lambda_upper=upper.value,
                beta_star=1.0 - upper.value,
                beta_hat=upper.beta_hat,
                delta_hat=upper.delta_hat,
                gamma_hat=upper.gamma_hat,
                residual_lower=res_lower,
                residual_kappa=upper.residual_kappa,
                lower_iterations=it_lower,
                upper_iterations=upper.refine_iterations,
            )
        )
    return ExponentTable(rows=rows)


@contextmanager
def _sink(path, newline=None):
    """Accept either a filesystem path or an open writable object."""
    if hasattr(path, "write"):
        yield path
    else:
        with open(path, "w", newline=newline) as fh:
            yield fh


def write_exponent_csv(table, path):
    """Write the pinned CSV column set, one row per p."""
    with _sink(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPONENT_CSV_COLUMNS)
        for row in table.rows:
            writer.writerow([repr(getattr(row, c)) for c in EXPONENT_CSV_COLUMNS])


def write_exponent_json(table, path):
    """Write the full table, diagnostics included, as JSON."""
    payload = {
        "schema_version": table.schema_version,
        "rows": [asdict(row) for row in table.rows],
    }
    with _sink(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
