"""Contour-integral realisation of operator functions.

The contour consists of an arc ``|lambda| = r`` spanning
``arg lambda in [theta0 - eps, theta1 + eps]`` and the two rays leaving its
ends.  It is traversed along the lower ray inward, the arc counterclockwise,
then the upper ray outward.  With ``R_W(lambda) = (W - lambda)^-1`` this
orientation gives

    (1/2 pi i) oint g(lambda) R_W(lambda) f d lambda = g(W) f

for ``g`` analytic in the sector and decaying along the rays.  Rays are
integrated on log-spaced composite Gauss-Legendre panels, the arc on
uniform panels.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .functions import OperatorFunctionSpec
from .oracle import richardson
from .operators import as_operator, sector_angle
from .schatten import SingularSequence, growth_envelope
from .summation import BracketingPlan, abel_lidskii_sum, bracketing_plan


class ContourError(ValueError):
    pass


TAIL_TOL = 1e-14


@dataclass(frozen=True)
class ContourSpec:
    """Arc radius, ray angles and node budget.

    ``nodes_arc`` and ``nodes_ray`` are total Gauss-Legendre node counts on
    the arc and on each ray (rounded up to whole panels of ``order`` nodes).
    ``R_max`` is chosen automatically when left as ``None``.
    """
    r: float
    theta0: float
    theta1: float
    epsilon: float
    R_max: Optional[float] = None
    nodes_arc: int = 64
    nodes_ray: int = 512
    order: int = 16

    @property
    def lower(self) -> float:
        return self.theta0 - self.epsilon

    @property
    def upper(self) -> float:
        return self.theta1 + self.epsilon

    def doubled(self) -> "ContourSpec":
        return replace(self, nodes_arc=2 * self.nodes_arc, nodes_ray=2 * self.nodes_ray)

    @classmethod
    def symmetric(cls, r: float, theta: float, epsilon: float, **kw) -> "ContourSpec":
        return cls(r, -theta, theta, epsilon, **kw)


@dataclass
class QuadratureResult:
    value: np.ndarray
    error_estimate: float
    truncation_tail_bound: float
    R_max: float = math.nan
    nodes: int = 0


@lru_cache(maxsize=None)
def _gl(order):
    return np.polynomial.legendre.leggauss(order)


def _panels(a: float, b: float, panels: int, order: int):
    x, w = _gl(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def resolvent_apply(w, lam: complex, f, eigs: Optional[np.ndarray] = None) -> np.ndarray:
    """``R_W(lambda) f = (W - lambda)^-1 f`` with spectrum clearance and residual checks."""
    w = as_operator(w)
    f = np.asarray(f, dtype=complex)
    ev = np.linalg.eigvals(w) if eigs is None else eigs
    scale = max(np.linalg.norm(w, 2), 1e-300)
    if np.min(np.abs(ev - lam)) <= 1e-12 * scale:
        raise ContourError(f"lambda = {lam} is on the spectrum (singular resolvent)")
    a = w - lam * np.eye(w.shape[0])
    x = np.linalg.solve(a, f)
    res = np.linalg.norm(a @ x - f)
    if res > 1e-10 * max(np.linalg.norm(f), 1e-300):
        raise ContourError(f"resolvent residual {res:.3e} too large at lambda = {lam}")
    return x


def resolvent_bridge(b, lam: complex, f) -> np.ndarray:
    """``B (I - lambda B)^-1 f``, equal to ``R_W(lambda) f`` for ``W = B^-1``."""
    b = as_operator(b)
    n = b.shape[0]
    return b @ np.linalg.solve(np.eye(n) - lam * b, np.asarray(f, dtype=complex))


class _Integrand:
    """``s(lambda) * (W - lambda)^-1 f`` evaluated node by node."""

    def __init__(self, w, f, scalar: Callable[[complex], complex]):
        # one complex Schur factorisation W = Q T Q^*, then a triangular solve per node
        self.t, self.q = sla.schur(as_operator(w), output="complex")
        self.qf = self.q.conj().T @ np.asarray(f, dtype=complex)
        self.diag = np.diag_indices(self.t.shape[0])
        self.d = np.diag(self.t).copy()
        self.normal = not np.any(np.triu(self.t, 1))
        self.scalar = scalar

    def __call__(self, lam):
        s = self.scalar(lam)
        if s == 0:
            return np.zeros_like(self.qf)
        if self.normal:
            return s * (self.q @ (self.qf / (self.d - lam)))
        a = self.t.copy()
        a[self.diag] -= lam
        return s * (self.q @ sla.solve_triangular(a, self.qf, check_finite=False))


def _validate(spec: ContourSpec, eigs: np.ndarray):
    if not spec.r > 0:
        raise ContourError("arc radius must be positive")
    if not spec.epsilon > 0:
        raise ContourError("angular margin must be positive")
    if np.min(np.abs(eigs)) <= spec.r:
        raise ContourError("arc radius must lie below the smallest eigenvalue modulus")
    args = np.angle(eigs)
    if np.any(args <= spec.lower) or np.any(args >= spec.upper):
        raise ContourError("spectrum is not inside the contour's sector")
    # clearance from rays and arc
    for ang in (spec.lower, spec.upper):
        d = np.abs(eigs * cmath.exp(-1j * ang))
        proj = (eigs * cmath.exp(-1j * ang))
        dist = np.where(proj.real > spec.r, np.abs(proj.imag), np.abs(eigs - spec.r * cmath.exp(1j * ang)))
        if np.min(dist) < 1e-8 or np.min(d) < 1e-300:
            raise ContourError("an eigenvalue lies within 1e-8 of a ray")
    if np.min(np.abs(np.abs(eigs) - spec.r)) < 1e-8:
        raise ContourError("an eigenvalue lies within 1e-8 of the arc")


def _choose_rmax(scalar, spec: ContourSpec, start: float, fnorm: float) -> tuple:
    """Smallest doubling radius where the integrand envelope falls below TAIL_TOL."""
    r = max(start, 2 * spec.r)
    for _ in range(200):
        env = max(abs(scalar(r * cmath.exp(1j * a))) for a in (spec.lower, spec.upper))
        if env * r * fnorm < TAIL_TOL:
            return r, env * r * fnorm
        r *= 2
    raise ContourError("integrand does not decay along the rays; tail bound above tolerance")


def _segments(spec: ContourSpec, r_max: float, radii: Sequence[float] = ()):
    """Pieces of the contour: ('arc', rho), ('ray', angle, a, b)."""
    cuts = [spec.r] + sorted(x for x in radii if spec.r < x < r_max) + [r_max]
    pieces = [("arc", spec.r)]
    for a, b in zip(cuts[:-1], cuts[1:]):
        pieces.append(("ray", spec.upper, a, b))
        pieces.append(("ray", spec.lower, a, b))
    return pieces, cuts


def _ray_integral(fun, angle, a, b, nodes_per_unit, order):
    """``int_a^b fun(s e^{i angle}) e^{i angle} ds`` on log-spaced panels."""
    ua, ub = math.log(a), math.log(b)
    panels = max(1, int(math.ceil((ub - ua) * nodes_per_unit / order)))
    u, wts = _panels(ua, ub, panels, order)
    d = cmath.exp(1j * angle)
    acc = 0
    for ui, wi in zip(u, wts):
        s = math.exp(ui)
        acc = acc + fun(s * d) * (wi * s * d)
    return acc


def _arc_integral(fun, rho, lo, hi, nodes, order):
    """Counterclockwise ``int fun(lambda) d lambda`` over ``|lambda| = rho``."""
    panels = max(1, int(math.ceil(nodes / order)))
    eta, wts = _panels(lo, hi, panels, order)
    acc = 0
    for e, wi in zip(eta, wts):
        lam = rho * cmath.exp(1j * e)
        acc = acc + fun(lam) * (wi * 1j * lam)
    return acc


def _contour_pieces(fun, spec: ContourSpec, r_max: float, radii=()):
    """Integrals over the arc at ``r``, arcs at ``radii`` and every ray piece."""
    pieces, cuts = _segments(spec, r_max, radii)
    span = math.log(r_max / spec.r)
    per_unit = spec.nodes_ray / max(span, 1e-12)
    out = {"arc": {}, "up": [], "low": []}
    for rho in cuts[:-1]:
        out["arc"][rho] = _arc_integral(fun, rho, spec.lower, spec.upper, spec.nodes_arc, spec.order)
    for a, b in zip(cuts[:-1], cuts[1:]):
        out["up"].append(_ray_integral(fun, spec.upper, a, b, per_unit, spec.order))
        out["low"].append(_ray_integral(fun, spec.lower, a, b, per_unit, spec.order))
    return out, cuts


def _assemble(parts, cuts):
    total = parts["arc"][cuts[0]]
    for u, l in zip(parts["up"], parts["low"]):
        total = total + u - l
    return total / (2j * math.pi)


def contour_integral(w, scalar, f, spec: ContourSpec) -> QuadratureResult:
    """``(1/2 pi i) oint scalar(lambda) R_W(lambda) f d lambda`` with error estimate.

    The estimate is the difference between the given node budget and the
    doubled one; the doubled result is returned.
    """
    w = as_operator(w)
    f = np.asarray(f, dtype=complex)
    eigs = np.linalg.eigvals(w)
    _validate(spec, eigs)
    fnorm = np.linalg.norm(f)
    if fnorm == 0:
        return QuadratureResult(np.zeros_like(f), 0.0, 0.0, spec.R_max or math.nan, 0)
    if spec.R_max is None:
        r_max, tail = _choose_rmax(scalar, spec, 4 * np.max(np.abs(eigs)), fnorm)
    else:
        r_max = spec.R_max
        env = max(abs(scalar(r_max * cmath.exp(1j * a))) for a in (spec.lower, spec.upper))
        tail = env * r_max * fnorm
    fun = _Integrand(w, f, scalar)
    coarse, cuts = _contour_pieces(fun, spec, r_max)
    fine, _ = _contour_pieces(fun, spec.doubled(), r_max)
    v1 = _assemble(coarse, cuts)
    v2 = _assemble(fine, cuts)
    nodes = 2 * (spec.nodes_arc + 2 * spec.nodes_ray)
    return QuadratureResult(v2, float(np.linalg.norm(v2 - v1)), float(tail), r_max, nodes)


def operator_function_apply(w, phi: OperatorFunctionSpec, t: float, f, spec: ContourSpec) -> QuadratureResult:
    """Quadrature of ``(1/2 pi i) oint exp(-phi t) phi R_W f d lambda``.

    For a matrix this is ``phi(W) exp(-t phi(W)) f``.
    """
    if not t > 0:
        raise ContourError("t must be positive")

    def scalar(lam):
        p = phi(lam)
        return cmath.exp(-p * t) * p

    return contour_integral(w, scalar, f, spec)


def residue_sum(w, phi: OperatorFunctionSpec, t: float, f) -> np.ndarray:
    """``sum_n phi(lambda_n) exp(-phi(lambda_n) t) f_n e_n`` for diagonalizable ``W``."""
    lam, v = np.linalg.eig(as_operator(w))
    c = np.linalg.solve(v, np.asarray(f, dtype=complex))
    g = np.array([phi(complex(x)) * cmath.exp(-phi(complex(x)) * t) for x in lam])
    return v @ (g * c)


class ExtrapolationError(ContourError):
    pass


@dataclass
class ExtrapolationResult:
    limit: np.ndarray
    t_grid: List[float]
    values: List[np.ndarray]
    corrections: List[float]


def richardson_limit(values: Sequence[np.ndarray], t_grid: Sequence[float], noise: float = 1e-9) -> ExtrapolationResult:
    """Richardson limit ``t -> 0`` for samples at ``t0 * 2^-j``.

    Successive extrapolated estimates must shrink in step (down to a noise
    floor of ``noise`` relative to the limit); otherwise the convergence is
    reported as non-monotone.
    """
    if len(values) < 4:
        raise ExtrapolationError("need at least four samples (j >= 3)")
    ests = [richardson(values[:k + 1]) for k in range(len(values))]
    limit = ests[-1]
    scale = max(np.linalg.norm(limit), 1e-300)
    corr = [float(np.linalg.norm(ests[k + 1] - ests[k])) for k in range(len(ests) - 1)]
    floor = noise * scale
    for a, b in zip(corr[:-1], corr[1:]):
        if b > a and b > floor:
            raise ExtrapolationError(f"non-monotone convergence: corrections {corr}")
    return ExtrapolationResult(limit, list(t_grid), list(values), corr)


def t_zero_extrapolation(w, phi: OperatorFunctionSpec, f, spec: ContourSpec, t0: float = 1e-2,
                         levels: int = 4) -> ExtrapolationResult:
    """Limit of the contour value as ``t -> 0`` (approximates ``phi(W) f``)."""
    ts = [t0 * 2.0 ** (-j) for j in range(levels)]
    vals = [operator_function_apply(w, phi, t, f, spec).value for t in ts]
    return richardson_limit(vals, ts)


@dataclass
class S1ContourReport:
    total: np.ndarray
    group_values: List[np.ndarray]
    series_total: np.ndarray
    agreement: float
    reassembly: float
    J: np.ndarray
    J_plus: np.ndarray
    J_minus: np.ndarray
    ring_summable: dict
    sector_spot_check: bool
    theta: float
    radii: List[float] = field(default_factory=list)


def _summable(seq, ratio_tol=1e-3):
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0 or seq.max() == 0:
        return True
    return bool(seq[-1] <= ratio_tol * seq.max())


def s1_contour_sum(b, alpha: float, t: float, f, spec: ContourSpec, plan: Optional[BracketingPlan] = None,
                   theta: Optional[float] = None, rs=None) -> S1ContourReport:
    """Segment the contour integral of ``exp(-lambda^alpha t) B (I - lambda B)^-1 f``.

    Group ``nu`` is bounded by the arcs at ``R_tilde_{nu-1}`` and
    ``R_tilde_nu`` (the first by the arc at ``r``, the last by the ray cut).
    Its integral is compared with the series group ``A_nu``.  ``J``,
    ``J_plus`` and ``J_minus`` are the norms of the arc and ray pieces.
    """
    b = as_operator(b)
    f = np.asarray(f, dtype=complex)
    theta = sector_angle(b) if theta is None else float(theta)
    if theta >= math.pi / (2 * alpha):
        raise ContourError(f"sector angle {theta:.6f} violates theta < pi/(2 alpha) = {math.pi / (2 * alpha):.6f}")
    if spec.upper * alpha >= math.pi / 2:
        raise ContourError(f"ray angle {spec.upper:.6f} violates alpha * angle < pi/2")
    w = np.linalg.inv(b)
    series = abel_lidskii_sum(b, _power(alpha), t, f, plan=plan, rs=rs, alpha=alpha)
    plan = series.plan
    radii = [float(x) for x in plan.R_tilde[:-1]]
    eigs = np.linalg.eigvals(w)
    _validate(spec, eigs)

    def scalar(lam):
        return cmath.exp(-t * cmath.exp(alpha * cmath.log(lam)))

    fnorm = max(np.linalg.norm(f), 1e-300)
    r_max = spec.R_max
    if r_max is None:
        r_max, _ = _choose_rmax(scalar, spec, 4 * np.max(np.abs(eigs)), fnorm)
    r_max = max(r_max, 2 * max(radii, default=spec.r))
    fun = _Integrand(w, f, scalar)
    parts, cuts = _contour_pieces(fun, spec, r_max, radii)
    total = _assemble(parts, cuts)
    groups = []
    for g in range(len(cuts) - 1):
        inner = parts["arc"][cuts[g]]
        outer = parts["arc"][cuts[g + 1]] if g + 1 < len(cuts) - 1 else 0
        groups.append((inner + parts["up"][g] - parts["low"][g] - outer) / (2j * math.pi))
    reassembled = np.sum(groups, axis=0)
    scale = max(np.linalg.norm(total), 1e-300)
    J = np.array([np.linalg.norm(parts["arc"][c]) for c in cuts[:-1]])
    Jp = np.array([np.linalg.norm(u) for u in parts["up"]])
    Jm = np.array([np.linalg.norm(v) for v in parts["low"]])
    # Re lambda^alpha >= |lambda|^alpha sin(alpha delta) on the ray nodes
    delta = math.pi / (2 * alpha) - spec.upper
    spot = True
    for ang in (spec.lower, spec.upper):
        for s in np.geomspace(spec.r, r_max, 50):
            lam = s * cmath.exp(1j * ang)
            lhs = cmath.exp(alpha * cmath.log(lam)).real
            spot = spot and lhs >= s ** alpha * math.sin(alpha * delta) * (1 - 1e-12)
    ring_summable = {"J": _summable(J), "J_plus": _summable(Jp), "J_minus": _summable(Jm)}
    return S1ContourReport(total, groups, series.value,
                           float(np.linalg.norm(total - series.value) / max(np.linalg.norm(series.value), 1e-300)),
                           float(np.linalg.norm(total - reassembled) / scale), J, Jp, Jm, ring_summable, spot, theta, radii)


def _power(alpha):
    from .functions import power
    return power(alpha)


@dataclass
class RayBound:
    angle: float
    psi: float
    values: np.ndarray
    sup: float

    @property
    def holds(self) -> bool:
        return self.sup <= 1 + 1e-8


def ray_resolvent_bound(b, angle: float, radii, theta: Optional[float] = None) -> RayBound:
    """``sup_r ||(I - r e^{i angle} B)^-1|| sin(psi)`` along a ray outside the sector."""
    b = as_operator(b)
    theta = sector_angle(b) if theta is None else float(theta)
    ang = math.atan2(math.sin(angle), math.cos(angle))
    if abs(ang) <= theta:
        raise ContourError(f"ray angle {angle} lies inside the sector of half-angle {theta}")
    if abs(math.sin(ang)) < 1e-12:
        raise ContourError("ray lies on the real axis")
    psi = min(abs(ang - theta), abs(ang + theta))
    n = b.shape[0]
    vals = []
    for r in np.asarray(radii, dtype=float):
        lam = r * cmath.exp(1j * ang)
        vals.append(np.linalg.norm(np.linalg.inv(np.eye(n) - lam * b), 2))
    vals = np.array(vals) * math.sin(min(psi, math.pi / 2))
    return RayBound(angle, psi, vals, float(vals.max()))


@dataclass
class EnvelopeRow:
    radius: float
    resolvent_max: float
    envelope: float

    @property
    def holds(self) -> bool:
        return self.resolvent_max <= self.envelope


def fredholm_envelope_check(b, plan: BracketingPlan, alpha: float, samples: int = 64) -> List[EnvelopeRow]:
    """Resolvent norm on the rings ``|lambda| = R_tilde`` against the growth envelope.

    The envelope is ``exp(gamma(R) R^alpha) R^m`` with ``gamma`` built from the
    singular values of ``b`` and the ring's shrink factor ``delta_nu``.
    """
    b = as_operator(b)
    n = b.shape[0]
    s = np.linalg.svd(b, compute_uv=False)
    seq = SingularSequence.explicit(s[s > 0])
    radii = [float(x) for x in plan.R_tilde]
    env = growth_envelope(seq, alpha, radii, delta0=float(plan.delta[0]))
    rows = []
    eta = 2 * np.pi * np.arange(samples) / samples
    for j, rr in enumerate(radii):
        worst = 0.0
        for e in eta:
            lam = rr * cmath.exp(1j * e)
            worst = max(worst, np.linalg.norm(np.linalg.inv(np.eye(n) - lam * b), 2))
        gam = env.gamma_of_r(rr, float(plan.delta[j]))
        rows.append(EnvelopeRow(rr, float(worst), float(math.exp(gam * rr ** alpha) * rr ** env.m)))
    return rows
