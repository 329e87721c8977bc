"""Abel-Lidskii series engine.

For a compact operator ``B`` with root system ``{e}`` and biorthogonal dual
``{g}``, the regularised series groups the root-vector contributions

    A_nu(phi, t) f = sum_{q in group nu} sum_xi sum_i e_{q xi + i} c_{q xi + i}(t)

with ``c_i(t) = exp(-phi(lambda_q) t) sum_m H_m(phi, lambda_q, t) c_{i+m}`` and
``lambda_q = 1/mu_q``.  ``H_m`` are Taylor coefficients of
``zeta -> exp(-t (phi(1/zeta) - phi(z)))`` at ``zeta = 1/z``, obtained by jet
arithmetic.  For a finite truncation the total equals ``h(B) f`` with
``h(mu) = exp(-t phi(1/mu))``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import jets
from .functions import OperatorFunctionSpec
from .jets import Jet
from .jordan import (RootSystem, biorthogonal_system, coefficients_c0,
                     jordan_decompose)
from .operators import as_operator


class SummationError(ValueError):
    pass


PLAN_RTOL = 1e-12


def hm_coefficients(phi: OperatorFunctionSpec, z: complex, t: float, m_max: int,
                    degree: Optional[int] = None) -> np.ndarray:
    """``H_0..H_{m_max}`` at the point ``z`` (with ``H_0 = 1`` exactly).

    ``degree`` is the jet degree used internally; it must cover ``m_max``.
    """
    if z == 0:
        raise SummationError("z must be nonzero")
    if t < 0:
        raise SummationError("t must be non-negative")
    degree = m_max if degree is None else degree
    if degree < m_max:
        raise SummationError(f"jet degree {degree} cannot resolve H_{m_max}")
    if t == 0:
        out = np.zeros(m_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    zeta = Jet.variable(1.0 / complex(z), degree)
    p = phi(zeta.reciprocal())
    p.c[0] = 0.0  # phi(1/zeta0) - phi(z) vanishes identically
    return jets.exp(p * (-t)).c[:m_max + 1].copy()


def coefficient_c(c_chain, phi: OperatorFunctionSpec, lam: complex, t: float,
                  degree: Optional[int] = None) -> np.ndarray:
    """Regularised coefficients of one chain, position 0 being the eigenvector."""
    c = np.asarray(c_chain, dtype=complex)
    if t == 0:
        return c.copy()
    k = c.size
    deg = (k + 1) if degree is None else degree
    h = hm_coefficients(phi, lam, t, k - 1, degree=deg)
    pref = cmath.exp(-phi(complex(lam)) * t)
    out = np.empty(k, dtype=complex)
    for i in range(k):
        out[i] = pref * np.dot(h[:k - i], c[i:])
    return out


@dataclass
class BracketingPlan:
    """Group boundaries and ring radii built from increasing moduli.

    ``boundaries`` are 1-based last indices of each group, the last one
    closing the list.  ``delta``, ``R`` and ``R_tilde`` are indexed like
    ``boundaries`` and use ``mu_abs[N_nu - 1]``.
    """
    alpha: float
    K: float
    mu_abs: np.ndarray
    boundaries: List[int]
    delta: np.ndarray
    R: np.ndarray
    R_tilde: np.ndarray
    sigma: float
    gap_boundaries: List[int] = field(default_factory=list)
    warning: str = ""

    @property
    def groups(self) -> List[range]:
        out, start = [], 0
        for nb in self.boundaries:
            out.append(range(start, nb))
            start = nb
        return out

    def verify(self) -> List[str]:
        """Re-check all plan algebra; returns a list of violations."""
        bad = []
        mu = self.mu_abs
        a, k = self.alpha, self.K
        for j, nb in enumerate(self.boundaries):
            m = mu[nb - 1]
            if abs(1.0 / self.delta[j] - (1 + m ** a / k)) > PLAN_RTOL * (1 + m ** a / k):
                bad.append(f"delta[{j}]")
            r = k * m ** (1 - a) + m
            if abs(self.R[j] - r) > PLAN_RTOL * r:
                bad.append(f"R[{j}]")
            if abs(self.R[j] * (1 - self.delta[j]) - m) > PLAN_RTOL * max(m, 1.0):
                bad.append(f"R(1-delta)[{j}]")
            if not (1 - self.delta[j]) * self.R[j] < self.R_tilde[j] < self.R[j]:
                bad.append(f"R_tilde[{j}]")
        for j in range(len(self.boundaries) - 1):
            nxt = (1 - self.delta[j + 1]) * self.R[j + 1]
            if self.R[j] > nxt * (1 + PLAN_RTOL):
                bad.append(f"ring order {j}")
        for i in range(len(mu) - 1):
            gap = mu[i + 1] - mu[i]
            need = k * mu[i] ** (1 - a)
            is_boundary = (i + 1) in self.gap_boundaries
            if is_boundary and gap < need:
                bad.append(f"boundary gap at {i + 1}")
            if not is_boundary and not self.warning and gap >= need:
                bad.append(f"missed boundary at {i + 1}")
        return bad


def default_K(mu_abs, alpha: float) -> float:
    """Half the smallest positive gap ratio ``(mu_{n+1}-mu_n)/mu_n^(1-alpha)``."""
    mu = np.asarray(mu_abs, dtype=float)
    if mu.size < 2:
        return 1.0
    ratios = np.diff(mu) / mu[:-1] ** (1 - alpha)
    pos = ratios[ratios > 0]
    return 0.5 * float(pos.min()) if pos.size else 1.0


def bracketing_plan(mu_abs_sorted, alpha: float, K: Optional[float] = None) -> BracketingPlan:
    """Group boundaries where ``|mu_{N+1}| - |mu_N| >= K |mu_N|^(1-alpha)``.

    ``R_tilde`` is the mid radius ``|mu_N| + K |mu_N|^(1-alpha) / 2`` of each
    ring.  A list without any admissible gap yields a single group and a
    warning.
    """
    mu = np.asarray(mu_abs_sorted, dtype=float)
    if mu.size == 0 or np.any(mu <= 0) or np.any(np.diff(mu) < 0):
        raise SummationError("moduli must be positive and sorted increasing")
    alpha = float(alpha)
    if alpha <= 0 or alpha.is_integer():
        raise SummationError("alpha must be a positive non-integer")
    K = default_K(mu, alpha) if K is None else float(K)
    if K <= 0:
        raise SummationError("K must be positive")
    gaps = np.diff(mu)
    need = K * mu[:-1] ** (1 - alpha)
    gap_b = [int(i + 1) for i in np.nonzero(gaps >= need)[0]]
    warning = ""
    if not gap_b and mu.size > 1:
        warning = "no admissible gap; single-group plan"
        warnings.warn(warning)
    bounds = gap_b + [int(mu.size)] if (not gap_b or gap_b[-1] != mu.size) else gap_b
    m = mu[np.array(bounds) - 1]
    delta = 1.0 / (1.0 + m ** alpha / K)
    R = K * m ** (1 - alpha) + m
    R_tilde = m + 0.5 * K * m ** (1 - alpha)
    m_int = math.floor(alpha)
    sigma = (2 * math.e / (1 - delta[0])) ** (m_int + 1)
    return BracketingPlan(alpha, K, mu, bounds, delta, R, R_tilde, sigma, gap_b, warning)


@dataclass
class GroupSum:
    nu: int
    value: np.ndarray
    norm: float


@dataclass
class SeriesContext:
    """Root system ordered by increasing ``|lambda|`` with its coefficients."""
    rs: RootSystem
    order: List[int]
    coeffs: List[np.ndarray]
    lambdas: np.ndarray

    @property
    def lambda_abs(self) -> np.ndarray:
        return np.abs(self.lambdas)


def series_context(b, f, rs: Optional[RootSystem] = None) -> SeriesContext:
    b = as_operator(b)
    if rs is None:
        rs = jordan_decompose(b)
    if any(c.eigenvalue == 0 for c in rs.chains):
        raise SummationError("operator is singular")
    bs = biorthogonal_system(rs, b)
    c0 = coefficients_c0(f, rs, bs)
    slices = rs.chain_slices()
    lam = np.array([1.0 / c.eigenvalue for c in rs.chains])
    order = sorted(range(len(rs.chains)), key=lambda q: (abs(lam[q]), lam[q].real, lam[q].imag))
    return SeriesContext(rs, order, [c0[slices[q]] for q in order], lam[order])


def group_sum(ctx: SeriesContext, phi: OperatorFunctionSpec, t: float, plan: BracketingPlan,
              nu: int) -> GroupSum:
    """``A_nu(phi, t) f`` over the chains in group ``nu`` of the plan."""
    if not 0 <= nu < len(plan.boundaries):
        raise SummationError(f"group {nu} outside plan")
    dim = ctx.rs.dim
    acc = np.zeros(dim, dtype=complex)
    for pos in plan.groups[nu]:
        q = ctx.order[pos]
        chain = ctx.rs.chains[q]
        ct = coefficient_c(ctx.coeffs[pos], phi, ctx.lambdas[pos], t)
        acc = acc + chain.vectors @ ct
    return GroupSum(nu, acc, float(np.linalg.norm(acc)))


def _neumaier(vectors):
    s = np.zeros_like(vectors[0])
    comp = np.zeros_like(vectors[0])
    for v in vectors:
        tmp = s + v
        big = np.abs(s) >= np.abs(v)
        comp += np.where(big, (s - tmp) + v, (v - tmp) + s)
        s = tmp
    return s + comp


@dataclass
class SeriesResult:
    value: np.ndarray
    group_norms: np.ndarray
    plan: BracketingPlan
    t: float


def abel_lidskii_sum(b, phi: OperatorFunctionSpec, t: float, f, plan: Optional[BracketingPlan] = None,
                     rs: Optional[RootSystem] = None, alpha: float = 0.5,
                     K: Optional[float] = None) -> SeriesResult:
    """Sum of all group contributions, accumulated in ascending group order.

    When no plan is supplied one is built from the moduli of the
    characteristic numbers with the given ``alpha`` and ``K``.
    """
    if t < 0:
        raise SummationError("t must be non-negative")
    f = np.asarray(f, dtype=complex)
    ctx = series_context(b, f, rs)
    if plan is None:
        plan = bracketing_plan(ctx.lambda_abs, alpha, K)
    elif plan.mu_abs.size != len(ctx.order):
        raise SummationError("plan does not match the root system")
    groups = [group_sum(ctx, phi, t, plan, nu) for nu in range(len(plan.boundaries))]
    value = _neumaier([g.value for g in groups])
    return SeriesResult(value, np.array([g.norm for g in groups]), plan, t)


@dataclass
class MonitorReport:
    t_grid: list
    norms: List[np.ndarray]
    last_over_max: List[float]
    monotone_from: List[Optional[int]]
    summable: bool


def s1_norm_monitor(norms_by_t: Sequence[np.ndarray], t_grid, ratio_tol: float = 1e-3,
                    skip: int = 3) -> MonitorReport:
    """Finite summability evidence for the per-group norms.

    Passes when, for every ``t``, the norms are non-increasing beyond the first
    ``skip`` groups and the last norm is at most ``ratio_tol`` times the
    largest.  ``monotone_from`` gives the first group after which the trace
    is non-increasing.
    """
    ratios, starts, ok = [], [], True
    for norms in norms_by_t:
        norms = np.asarray(norms, dtype=float)
        if norms.size < 3:
            raise SummationError("monitor needs at least three groups")
        mx = norms.max()
        ratio = norms[-1] / mx if mx > 0 else 0.0
        inc = np.nonzero(np.diff(norms) > 1e-14 * mx)[0]
        start = int(inc[-1] + 1) if inc.size else 0
        ratios.append(float(ratio))
        starts.append(start)
        ok = ok and ratio <= ratio_tol and start <= skip
    return MonitorReport(list(t_grid), [np.asarray(n) for n in norms_by_t], ratios, starts, ok)
