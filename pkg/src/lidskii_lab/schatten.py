"""Singular-sequence diagnostics: counting functions, Schatten sums,
convergence exponents and the growth envelopes used for resolvent bounds.

A :class:`SingularSequence` is either an explicit finite array or an
analytic generator ``n -> s_n`` (1-based indices).  Generator values are
memoised in a thread-safe prefix cache, so repeated diagnostics over the same
window are cheap.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .operators import as_operator, singular_values


class SequenceError(ValueError):
    """Raised for malformed sequences or unmet preconditions."""


class SingularSequence:
    """Positive non-increasing sequence ``s_1 >= s_2 >= ...``.

    Build with :meth:`explicit` or :meth:`generator`.  Indices are 1-based.
    """

    def __init__(self, values=None, func: Optional[Callable] = None,
                 length: Optional[int] = None, name: str = "sequence"):
        if (values is None) == (func is None):
            raise SequenceError("give exactly one of values or func")
        self.name = name
        self._lock = threading.Lock()
        if values is not None:
            v = np.asarray(values, dtype=float).ravel()
            if v.size == 0:
                raise SequenceError("empty sequence")
            if np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise SequenceError("singular numbers must be finite and positive")
            if np.any(np.diff(v) > 0):
                raise SequenceError("explicit sequence must be non-increasing")
            self._cache = v
            self.length = v.size
            self._func = None
        else:
            self._func = func
            self.length = length
            self._cache = np.empty(0)
            self._spot_check()

    @classmethod
    def explicit(cls, values, name="explicit"):
        return cls(values=values, name=name)

    @classmethod
    def generator(cls, func, length=None, name="generator"):
        """``func`` maps an integer array of indices to values (vectorised)."""
        return cls(func=func, length=length, name=name)

    @property
    def is_finite(self) -> bool:
        return self.length is not None

    def _spot_check(self):
        top = self.length or 10 ** 9
        grid = np.unique(np.logspace(0, math.log10(top), 40).astype(np.int64))
        vals = np.asarray(self._func(grid), dtype=float)
        if np.any(vals <= 0) or np.any(~np.isfinite(vals)):
            raise SequenceError(f"{self.name}: generator produced non-positive values")
        if np.any(np.diff(vals) > 0):
            raise SequenceError(f"{self.name}: generator is not monotone on the spot-check grid")

    def head(self, n: int) -> np.ndarray:
        """Values ``s_1..s_n`` (truncated at the length for finite sequences)."""
        if self.length is not None:
            n = min(n, self.length)
        if n <= self._cache.size:
            return self._cache[:n]
        with self._lock:
            if n > self._cache.size:
                idx = np.arange(self._cache.size + 1, n + 1)
                new = np.asarray(self._func(idx), dtype=float)
                self._cache = np.concatenate([self._cache, new])
            return self._cache[:n]

    def at(self, idx) -> np.ndarray:
        """Values at arbitrary 1-based indices (no caching for far indices)."""
        idx = np.asarray(idx, dtype=np.int64)
        if np.any(idx < 1) or (self.length is not None and np.any(idx > self.length)):
            raise SequenceError("index out of range")
        if self._func is None or (idx.size and idx.max() <= self._cache.size):
            return self._cache[idx - 1]
        return np.asarray(self._func(idx), dtype=float)


def power_law(rho: float, shift: float = 0.0) -> SingularSequence:
    """``s_n = (n + shift)^(-1/rho)``."""
    return SingularSequence.generator(lambda n: (n + shift) ** (-1.0 / rho), name=f"power({rho})")


def n_log_n(rho: float, shift: float = 1.0) -> SingularSequence:
    """``s_n = (n ln(n + shift))^(-1/rho)``; the shift keeps ``n = 1`` finite."""
    return SingularSequence.generator(
        lambda n: (n * np.log(n + shift)) ** (-1.0 / rho), name=f"nlogn({rho})")


def geometric(ratio: float = 0.5) -> SingularSequence:
    """``s_n = ratio^n``, truncated before double-precision underflow."""
    length = int(-1000 / math.log2(ratio))
    return SingularSequence.generator(lambda n: ratio ** np.asarray(n, dtype=float),
                                      length=length, name=f"geometric({ratio})")


def subtle_eigenvalues(n, kappa: float, q: float) -> np.ndarray:
    """``lambda_n = n^k ln^k(n+q) (ln ln(n+q))^k`` for ``q > e^e - 1``."""
    n = np.asarray(n, dtype=float)
    lq = np.log(n + q)
    return (n * lq * np.log(lq)) ** kappa


def _check_q(q):
    if not q > math.exp(math.e) - 1:
        raise SequenceError(f"q must exceed e^e - 1 = {math.exp(math.e) - 1:.4f}, got {q}")


def subtle_sequence(kappa: float, q: float) -> SingularSequence:
    """Singular numbers ``1/lambda_n`` of the subtle diagonal model."""
    _check_q(q)
    return SingularSequence.generator(lambda n: 1.0 / subtle_eigenvalues(n, kappa, q),
                                      name=f"subtle(k={kappa},q={q})")


def counting_function(seq: SingularSequence, r: float, max_index: int = 10 ** 12) -> int:
    """``n(r) = #{i : 1/s_i < r}``.

    Generators are searched by doubling plus bisection, which is exact because
    the sequence is monotone.
    """
    if not r > 0:
        raise SequenceError("radius must be positive")
    thr = 1.0 / r
    if seq._func is None:
        return int(np.searchsorted(-seq._cache, -thr, side="left"))
    if seq.at([1])[0] <= thr:
        return 0
    lo, hi = 1, 2
    limit = seq.length or max_index
    while hi <= limit and seq.at([hi])[0] > thr:
        lo, hi = hi, hi * 2
    if hi > limit:
        if seq.length is not None and seq.at([limit])[0] > thr:
            return int(limit)
        hi = limit + 1 if seq.length is not None else hi
        if seq.length is None:
            raise SequenceError(f"counting index exceeds {max_index}")
    # invariant: s_lo > thr >= s_hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if seq.at([mid])[0] > thr:
            lo = mid
        else:
            hi = mid
    return int(lo)


def counting_function_scan(seq: SingularSequence, r: float, n_max: int) -> int:
    """Reference linear scan over the first ``n_max`` terms."""
    s = seq.head(n_max)
    return int(np.sum(1.0 / s < r))


@dataclass
class SchattenSum:
    partial: float
    tail_flag: str
    p: float
    n_max: int
    last_decade_fraction: float
    decay_exponent: float
    tail_estimate: float


def _decay_exponent(n, terms):
    """Slope ``-d ln(term)/d ln n`` fitted over the given indices."""
    good = terms > 0
    if good.sum() < 2:
        return math.inf
    slope = np.polyfit(np.log(n[good]), np.log(terms[good]), 1)[0]
    return float(-slope)


def schatten_norm(seq: SingularSequence, p: float, n_max: int = 10 ** 6) -> SchattenSum:
    """Partial Schatten sum ``(sum_{n<=n_max} s_n^p)^(1/p)`` with a tail verdict.

    ``tail_flag`` is ``divergent-suspect`` when the last decade of indices
    carries more than 1% of the partial sum, ``convergent`` otherwise, and
    ``undetermined`` for fewer than ten terms.  When the terms decay like
    ``n^-d`` with ``d > 1`` the remaining tail is estimated by the integral
    of that power law.
    """
    if not p > 0:
        raise SequenceError("p must be positive")
    s = seq.head(n_max)
    n_max = s.size
    terms = s ** p
    total = math.fsum(terms)
    partial = total ** (1.0 / p)
    if n_max < 10:
        return SchattenSum(partial, "undetermined", p, n_max, math.nan, math.nan, math.nan)
    start = n_max // 10
    frac = math.fsum(terms[start:]) / total
    idx = np.unique(np.geomspace(max(start, 1), n_max, 50).astype(np.int64))
    d = _decay_exponent(idx.astype(float), terms[idx - 1])
    tail = terms[-1] * n_max / (d - 1.0) if d > 1 else math.inf
    flag = "divergent-suspect" if frac > 0.01 else "convergent"
    return SchattenSum(partial, flag, p, n_max, frac, d, tail / total)


@dataclass
class OrderEstimate:
    rho_hat: float
    mu_hat: float
    class_tag: str
    fit_window: tuple
    residual: float
    super_polynomial: bool = False
    slope_log_log: float = math.nan
    divergence_flag: str = ""
    convergence_exponent_at_eps: float = math.nan


def convergence_exponent(seq: SingularSequence, window: Sequence[int],
                         eps: float = 0.05, points: int = 400) -> OrderEstimate:
    """Estimate the convergence exponent over an index window.

    Fits ``ln(1/s_n) = a ln n + b ln ln n + c`` on log-spaced indices; the
    log-log correction makes ``(n ln n)^(-1/rho)`` models exact, while pure
    power laws give ``b = 0``.  Then ``rho_hat = 1/a``.  Decay faster than any
    power (local slope more than doubling across the window) gives
    ``rho_hat = 0``.

    ``class_tag`` is ``S*_rho`` when the Schatten sum at ``rho_hat`` looks
    divergent and the terms at ``rho_hat*(1+eps)`` decay faster than ``1/n``;
    ``S_p`` when the sum already converges at ``rho_hat``.
    """
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi - lo + 1 < 10:
        raise SequenceError("window must start at 1 or later and hold at least 10 indices")
    if seq.length is not None and hi > seq.length:
        raise SequenceError("window exceeds the sequence length")
    n = np.unique(np.geomspace(max(lo, 3), hi, points).astype(np.int64))
    if n.size < 5:
        n = np.arange(max(lo, 3), hi + 1)
    s = seq.at(n)
    if np.any(np.diff(s) > 0):
        raise SequenceError("sequence is not monotone inside the window")
    y = np.log(1.0 / s)
    ln = np.log(n.astype(float))
    quarter = max(n.size // 4, 2)
    slope_a = np.polyfit(ln[:quarter], y[:quarter], 1)[0]
    slope_b = np.polyfit(ln[-quarter:], y[-quarter:], 1)[0]
    loglog = float(np.polyfit(ln, y, 1)[0])
    if slope_a > 0 and slope_b > 2 * slope_a:
        return OrderEstimate(0.0, math.inf, "S_p", (lo, hi), math.nan, True, loglog)
    x = np.column_stack([ln, np.log(ln), np.ones_like(ln)])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = float(np.sqrt(np.mean((x @ coef - y) ** 2)))
    a = coef[0]
    if a <= 0:
        return OrderEstimate(math.inf, 0.0, "undetermined", (lo, hi), resid, False, loglog)
    rho = float(1.0 / a)
    div = schatten_norm(seq, rho, hi)
    conv_idx = n[n >= max(hi // 10, lo)]
    d_eps = _decay_exponent(conv_idx.astype(float), seq.at(conv_idx) ** (rho * (1 + eps)))
    if div.tail_flag == "divergent-suspect" and d_eps > 1:
        tag = "S*_rho"
    elif div.tail_flag == "convergent":
        tag = "S_p"
    else:
        tag = "undetermined"
    return OrderEstimate(rho, 1.0 / rho, tag, (lo, hi), resid, False, loglog, div.tail_flag, d_eps)


def _eval_increasing(lam, n):
    if isinstance(lam, SingularSequence):
        return lam.at(n)
    return np.asarray(lam(np.asarray(n)), dtype=float)


@dataclass
class SubtleCheck:
    grid: np.ndarray
    ratios: np.ndarray
    decrease: float
    verdict: bool


def subtle_condition_check(lam, kappa: float, grid, min_decrease: float = 10.0) -> SubtleCheck:
    """Trace ``rho_n = n^k (1+k) ln^k(lambda_n) / lambda_n`` on an index grid.

    ``lam`` is a vectorised callable (or sequence object) giving the increasing
    eigenvalues ``lambda_n``.  The verdict passes when the largest ratio in the
    first decade of the grid exceeds the largest in the last decade by at
    least ``min_decrease``.
    """
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    if grid.size < 2:
        raise SequenceError("grid needs at least two indices")
    lv = _eval_increasing(lam, grid)
    if np.any(lv <= 1):
        raise SequenceError("lambda_n must exceed 1 on the grid (logarithm domain)")
    n = grid.astype(float)
    # work in logs so that exponentially growing lambda_n do not overflow
    log_ratio = kappa * np.log(n) + math.log1p(kappa) + kappa * np.log(np.log(lv)) - np.log(lv)
    ratios = np.exp(log_ratio)
    first = log_ratio[grid <= grid[0] * 10].max()
    last = log_ratio[grid >= grid[-1] / 10].max()
    decrease = float(math.exp(first - last))
    return SubtleCheck(grid, ratios, decrease, decrease >= min_decrease)


@dataclass
class DivergenceTrace:
    checkpoints: list
    partial_sums: list
    ratio: float
    decades: float
    verdict: bool
    integral_increment: float


def subtle_divergence(kappa: float, q: float, checkpoints, lam: Optional[Callable] = None,
                        min_ratio: float = 2.0) -> DivergenceTrace:
    """Partial sums of ``sum lambda_n^(-1/kappa)`` for the subtle diagonal spectrum.

    The verdict requires ``S(last)/S(first) >= min_ratio`` when the
    checkpoints span at least three decades (otherwise it is vacuously true).
    ``integral_increment`` is the matching integral-test growth
    ``lnlnln(x+q)`` between the first and last checkpoint, valid for the
    default spectrum.  ``lam`` replaces the spectrum, e.g. by a convergent
    comparison sequence.
    """
    _check_q(q)
    cps = sorted(int(c) for c in checkpoints)
    if not cps or cps[0] < 1:
        raise SequenceError("checkpoints must be positive indices")
    n = np.arange(1, cps[-1] + 1, dtype=float)
    lv = subtle_eigenvalues(n, kappa, q) if lam is None else np.asarray(lam(n), dtype=float)
    terms = lv ** (-1.0 / kappa)
    csum = np.cumsum(terms)
    sums = [float(csum[c - 1]) for c in cps]
    ratio = sums[-1] / sums[0]
    decades = math.log10(cps[-1] / cps[0])
    verdict = ratio >= min_ratio if decades >= 3 else True

    def l3(x):
        return math.log(math.log(math.log(x + q)))

    return DivergenceTrace(cps, sums, ratio, decades, verdict, l3(cps[-1]) - l3(cps[0]))


@dataclass
class GrowthEnvelope:
    alpha: float
    m: int
    sigma: float
    delta0: float
    r_grid: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    premise: np.ndarray
    conclusion: np.ndarray
    premise_decreasing: bool
    conclusion_decreasing: bool
    tail_cutoff: int
    tail_estimate: float
    _steps: np.ndarray = field(repr=False, default=None)
    _tail: float = field(repr=False, default=0.0)

    @property
    def implication_holds(self) -> bool:
        return (not self.premise_decreasing) or self.conclusion_decreasing

    def beta_of_r(self, r: float) -> float:
        return _beta(self._steps, self._tail, self.alpha, self.m, r)

    def gamma_of_r(self, r: float, delta: float) -> float:
        """``beta(r^(m+1)) + (2 + ln(4e/delta)) beta(sigma r^(m+1)) sigma^(alpha/(m+1))``."""
        k = self.m + 1
        return (self.beta_of_r(r ** k) + (2 + math.log(4 * math.e / delta))
                * self.beta_of_r(self.sigma * r ** k) * self.sigma ** (self.alpha / k))


def _beta(steps, tail, alpha, m, r):
    """Closed-form step-function integrals.

    With jump points ``t_i`` of ``n_{m+1}``,
    ``int_0^r n(t)/t dt = sum_{t_i<r} ln(r/t_i)`` and
    ``r int_r^inf n(t)/t^2 dt = n(r) + r sum_{t_i>=r} 1/t_i``.
    """
    k = np.searchsorted(steps, r, side="left")
    first = float(np.sum(np.log(r / steps[:k])))
    second = k + r * (float(np.sum(1.0 / steps[k:])) + tail)
    return r ** (-alpha / (m + 1)) * (first + second)


def _strictly_decreasing(a):
    return bool(np.all(np.diff(a) < 0))


def growth_envelope(seq: SingularSequence, alpha: float, r_grid, delta0: float = 0.5,
                    tail_cutoff: int = 10 ** 6, tail_rtol: float = 1e-2) -> GrowthEnvelope:
    """Growth envelope ``beta``, ``gamma`` and the monotone growth implication check.

    ``n_{m+1}`` is the counting function of ``s_n^(m+1)``.  Infinite sequences
    are cut at ``tail_cutoff`` terms and the remaining ``sum s_n^(m+1)`` is
    extrapolated from the fitted power-law decay; a non-summable tail raises.

    The premise trace is ``ln r * n(r) / r^alpha`` and the conclusion trace is
    ``beta(r^(m+1)) * ln r``; the implication holds when a strictly
    decreasing premise comes with a strictly decreasing conclusion.
    """
    alpha = float(alpha)
    if alpha <= 0 or float(alpha).is_integer():
        raise SequenceError("alpha must be a positive non-integer")
    m = int(math.floor(alpha))
    k = m + 1
    s = seq.head(tail_cutoff)
    pw = s ** k
    tail = 0.0
    if not seq.is_finite or s.size < (seq.length or 0):
        idx = np.unique(np.geomspace(max(s.size // 10, 1), s.size, 50).astype(np.int64))
        d = _decay_exponent(idx.astype(float), pw[idx - 1])
        if not d > 1:
            raise SequenceError(f"tail of s^(m+1) is not summable at cutoff {s.size} (decay {d:.3f})")
        tail = pw[-1] * s.size / (d - 1)
        if tail > tail_rtol * math.fsum(pw):
            raise SequenceError(f"tail beyond cutoff {s.size} is too heavy ({tail:.3e})")
    steps = 1.0 / pw  # increasing
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 1):
        raise SequenceError("r_grid must exceed 1")
    if not seq.is_finite and np.any(r_grid ** k >= steps[-1]):
        raise SequenceError("r_grid reaches beyond the tail cutoff")
    sigma = (2 * math.e / (1 - delta0)) ** k
    beta = np.array([_beta(steps, tail, alpha, m, r ** k) for r in r_grid])
    beta_sig = np.array([_beta(steps, tail, alpha, m, sigma * r ** k) for r in r_grid])
    gamma = beta + (2 + math.log(4 * math.e / delta0)) * beta_sig * sigma ** (alpha / k)
    nr = np.array([np.searchsorted(-s, -1.0 / r, side="left") for r in r_grid], dtype=float)
    premise = np.log(r_grid) * nr / r_grid ** alpha
    conclusion = beta * np.log(r_grid)
    return GrowthEnvelope(alpha, m, sigma, delta0, r_grid, beta, gamma, premise, conclusion,
                          _strictly_decreasing(premise), _strictly_decreasing(conclusion),
                          int(s.size), float(tail), steps, tail)


@dataclass
class CountingBound:
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def power_counting_bound(b, m: int, r: float) -> CountingBound:
    """``n_{b^(m+1)}(r^(m+1)) <= (m+1) n_b(r)`` via singular values of ``b^(m+1)``."""
    if m < 1:
        raise SequenceError("m must be at least 1")
    b = as_operator(b)
    k = m + 1
    sb = singular_values(b)
    sk = singular_values(np.linalg.matrix_power(b, k))
    lhs = int(np.sum(sk > r ** (-k)))
    rhs = k * int(np.sum(sb > 1.0 / r))
    return CountingBound(lhs, rhs)


@dataclass
class EigenDecayTable:
    moduli: np.ndarray
    singular: np.ndarray
    table: np.ndarray
    o_form: Optional[np.ndarray]
    weyl_product_ok: bool
    weyl_sum_ok: bool
    individual_exceed: list


def eigen_decay_probe(b, tau: float, rho: Optional[float] = None, rtol: float = 1e-10) -> EigenDecayTable:
    """``|lambda_n| n^tau`` with Weyl-type dominance checks.

    Weyl's theorem gives ``prod_{k<=m} |lambda_k| <= prod_{k<=m} s_k`` and the
    additive majorisation ``sum_{k<=m} |lambda_k| <= sum_{k<=m} s_k``; both are
    verified.  Indices where ``|lambda_m| > s_m`` are listed; such indices are
    normal for non-normal matrices since the products are equal at ``m = dim``.
    """
    b = as_operator(b)
    lam = np.sort(np.abs(np.linalg.eigvals(b)))[::-1]
    s = singular_values(b)
    n = np.arange(1, lam.size + 1, dtype=float)
    table = lam * n ** tau
    o_form = s * n ** (1.0 / rho) if rho else None
    scale = max(s[0], 1e-300)
    with np.errstate(divide="ignore"):
        ll = np.cumsum(np.log(np.maximum(lam, 1e-300 * scale)))
        ls = np.cumsum(np.log(np.maximum(s, 1e-300 * scale)))
    prod_ok = bool(np.all(ll <= ls + 1e-8 * np.maximum(1.0, np.abs(ls))))
    sum_ok = bool(np.all(np.cumsum(lam) <= np.cumsum(s) * (1 + rtol) + rtol * scale))
    exceed = [int(i + 1) for i in np.nonzero(lam > s * (1 + rtol) + rtol * scale)[0]]
    return EigenDecayTable(lam, s, table, o_form, prod_ok, sum_ok, exceed)


def counting_ratio_check(seq: SingularSequence, rho: float, window, radii) -> dict:
    """Finite restatement of the monotone-function implication.

    Reports the decrease of ``s_m m^(1/rho)`` across the index window and of
    ``n(r)/r^rho`` across the radii.
    """
    lo, hi = window
    s_lo, s_hi = seq.at([lo, hi])
    seq_drop = (s_lo * lo ** (1 / rho)) / (s_hi * hi ** (1 / rho))
    r0, r1 = radii
    c_drop = (counting_function(seq, r0) / r0 ** rho) / max(counting_function(seq, r1) / r1 ** rho, 1e-300)
    return {"sequence_decrease": float(seq_drop), "counting_decrease": float(c_drop)}
