"""Concrete operators in truncated form, with their special-property checks.

Every constructor returns a :class:`ZooModel` holding the unbounded operator
``W`` (when it has one), its compact inverse ``B = W^-1`` and, where the Jordan
structure is known, a declared root system so that downstream code never has
to rediscover it numerically.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy import special

from .functions import log_composite
from .jordan import RootSystem, jordan_matrix, root_system_from_structure
from .operators import OperatorError, as_operator, sector_angle, sector_check, SectorSpec
from .schatten import subtle_eigenvalues, _check_q


class ZooError(ValueError):
    pass


@dataclass
class ZooModel:
    variant: str
    params: dict
    w: Optional[np.ndarray]
    b: np.ndarray
    blocks: Optional[List[Tuple[complex, int]]] = None
    root_system: Optional[RootSystem] = None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def diagonalizable(self) -> bool:
        if self.blocks is None:
            return True
        return all(k == 1 for _, k in self.blocks)


def _diag_model(variant, params, lam, metadata=None) -> ZooModel:
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    b_diag = 1.0 / lam
    blocks = [(complex(x), 1) for x in b_diag]
    rs = root_system_from_structure(blocks, np.eye(n))
    return ZooModel(variant, params, np.diag(lam), np.diag(b_diag), blocks, rs, metadata or {})


def sturm_liouville(N: int) -> ZooModel:
    """``-u'' = lambda u`` on ``(0, pi)`` with Dirichlet data: ``lambda_n = n^2``."""
    if N < 1:
        raise ZooError("N must be at least 1")
    lam = np.arange(1, N + 1, dtype=float) ** 2
    meta = {"basis": "sin(n x) on (0, pi)", "norm_squared": math.pi / 2}
    return _diag_model("sturm_liouville", {"N": N}, lam, meta)


def sine_inner(n: int, m: int, points: int = 4097) -> float:
    """``int_0^pi sin(nx) sin(mx) dx`` by the trapezoid rule (exact for these modes)."""
    x = np.linspace(0.0, math.pi, points)
    y = np.sin(n * x) * np.sin(m * x)
    return float(np.trapezoid(y, x)) if hasattr(np, "trapezoid") else float(np.trapz(y, x))


def elliptic2d(a2: complex, a0: complex, N: int) -> ZooModel:
    """``a2 * (m^2 + k^2) + a0`` for ``1 <= m, k <= N``, sorted by modulus."""
    a2, a0 = complex(a2), complex(a0)
    if N < 1:
        raise ZooError("N must be at least 1")
    if a2.real <= 0:
        raise ZooError("Re a2 must be positive")
    m, k = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1))
    lam = a2 * (m ** 2 + k ** 2).ravel() + a0
    order = np.lexsort((np.angle(lam), np.abs(lam)))
    lam = lam[order]
    if np.any(lam == 0):
        raise ZooError("zero eigenvalue; shift a0")
    return _diag_model("elliptic2d", {"a2": a2, "a0": a0, "N": N}, lam, {"target_order": 1.0})


def subtle_diagonal(kappa: float, q: float, N: int) -> ZooModel:
    """Diagonal model ``lambda_n = n^k ln^k(n+q) (ln ln(n+q))^k``."""
    _check_q(q)
    if kappa <= 0 or N < 1:
        raise ZooError("kappa must be positive and N at least 1")
    lam = subtle_eigenvalues(np.arange(1, N + 1), kappa, q)
    if np.any(np.diff(lam) <= 0):
        raise ZooError("diagonal is not increasing")
    return _diag_model("subtle_diagonal", {"kappa": kappa, "q": q, "N": N}, lam)


@dataclass
class FractionalDifference:
    c: float
    d: float
    beta: float
    M: np.ndarray
    y_beta: Optional[np.ndarray]
    y: Optional[np.ndarray]
    shift: int
    spacing: float


def binomial_weights(beta: float, c: float, K_terms: int) -> np.ndarray:
    """``M_k = -beta Gamma(k - beta) / (k! Gamma(1 - beta)) c^beta`` via log-Gamma."""
    if K_terms < 1:
        raise ZooError("K_terms must be at least 1")
    if not 0 < beta < 1:
        raise ZooError("beta must lie in (0, 1)")
    k = np.arange(K_terms + 1, dtype=float)
    logmag = (special.gammaln(k - beta) - special.gammaln(k + 1) - special.gammaln(1 - beta)
              + math.log(beta) + beta * math.log(c))
    sign = -special.gammasgn(k - beta)
    return sign * np.exp(logmag)


def difference_fractional(c: float, d: float, beta: float, K_terms: int, grid: int = 0,
                          spacing: Optional[float] = None) -> FractionalDifference:
    """Weights of ``Y^beta = c^beta (I - T_d)^beta`` and its periodic-grid matrix.

    ``T_d f(x) = f(x - d)``.  With ``grid = n > 0`` points of spacing
    ``spacing`` (default ``d``), ``d`` must be an integer multiple of the
    spacing; ``Y^beta`` is assembled as the circulant shift sum.
    """
    if c <= 0 or d <= 0:
        raise ZooError("c and d must be positive")
    m = binomial_weights(beta, c, K_terms)
    yb = y = None
    shift = 0
    h = d if spacing is None else float(spacing)
    if grid:
        ratio = d / h
        shift = int(round(ratio))
        if shift < 1 or abs(ratio - shift) > 1e-12 * ratio:
            raise ZooError("shift d must be a positive integer multiple of the grid spacing")
        col = np.zeros(grid)
        np.add.at(col, (np.arange(K_terms + 1) * shift) % grid, m)
        yb = sla.circulant(col)
        col1 = np.zeros(grid)
        col1[0] += c
        col1[shift % grid] -= c
        y = sla.circulant(col1)
    return FractionalDifference(c, d, beta, m, yb, y, shift, h)


def fractional_symbol(fd: FractionalDifference, omega: float) -> Tuple[complex, complex]:
    """Truncated symbol ``sum M_k e^{-i omega k d}`` and the exact ``c^beta (1 - e^{-i omega d})^beta``."""
    k = np.arange(fd.M.size)
    approx = complex(np.sum(fd.M * np.exp(-1j * omega * k * fd.d)))
    exact = fd.c ** fd.beta * cmath.exp(fd.beta * cmath.log(1 - cmath.exp(-1j * omega * fd.d)))
    return approx, exact


def riesz_constant(beta: float) -> float:
    """``B_beta = 1 / (2 Gamma(beta) cos(beta pi / 2))``."""
    if not 0 < beta < 1:
        raise ZooError("beta must lie in (0, 1)")
    return 1.0 / (2 * math.gamma(beta) * math.cos(beta * math.pi / 2))


@dataclass
class RieszKernel:
    beta: float
    B_beta: float
    nodes: np.ndarray
    h: float
    kernel: np.ndarray
    i_plus: np.ndarray
    i_minus: np.ndarray


def _power_antiderivative(u, beta):
    """Antiderivative of ``u^(beta-1)`` on ``u >= 0``."""
    return np.power(np.maximum(u, 0.0), beta) / beta


def riesz_kernel(beta: float, n: int, length: float = 1.0) -> RieszKernel:
    """Cell-integrated Riesz kernel on ``n`` uniform cells of ``[0, length]``.

    Entry ``(i, j)`` integrates ``B_beta |x_i - s|^(beta-1)`` over cell ``j``
    exactly, ``x_i`` being the cell centres.  The one-sided parts
    ``I_+`` (``s < x_i``) and ``I_-`` (``s > x_i``) carry the ``1/Gamma(beta)``
    normalisation of the fractional integrals.
    """
    bconst = riesz_constant(beta)
    h = length / n
    x = (np.arange(n) + 0.5) * h
    a = np.arange(n) * h
    b = a + h
    xi = x[:, None]
    # left part: s in [a_j, min(b_j, x_i)], u = x_i - s
    lp = _power_antiderivative(xi - a[None, :], beta) - _power_antiderivative(xi - np.minimum(b[None, :], xi), beta)
    # right part: s in [max(a_j, x_i), b_j], u = s - x_i
    rp = _power_antiderivative(b[None, :] - xi, beta) - _power_antiderivative(np.maximum(a[None, :], xi) - xi, beta)
    g = math.gamma(beta)
    i_plus = lp / g
    i_minus = rp / g
    kernel = bconst * (lp + rp)
    return RieszKernel(beta, bconst, x, h, kernel, i_plus, i_minus)


def psi_function(z: complex, xi: float) -> dict:
    """``psi(z) = z^xi ln z ln ln z`` through the explicit real/imaginary split.

    With ``phi = arg z`` and ``a = ln|ln|z| + i phi|``,
    ``ln ln z = a + i arctan(phi / ln|z|)``.
    """
    z = complex(z)
    if abs(z) <= math.e:
        raise ZooError("|z| must exceed e")
    r = abs(z)
    phi = cmath.phase(z)
    L = math.log(r)
    a = math.log(abs(complex(L, phi)))
    at = math.atan(phi / L)
    rx = r ** xi
    u = a * L - phi * at
    v = a * phi + L * at
    re = rx * math.cos(xi * phi) * u - rx * math.sin(xi * phi) * v
    im = rx * math.sin(xi * phi) * u + rx * math.cos(xi * phi) * v
    abs2 = r ** (2 * xi) * (L * L + phi * phi) * (a * a + at * at)
    return {"value": complex(re, im), "re": re, "im": im, "abs2": abs2,
            "arg": math.atan2(im, re), "branch": "principal; arg ln z = arctan(arg z / ln|z|)"}


@dataclass
class PhiKappaReport:
    window: Tuple[int, int]
    C1: float
    C2: float
    positivity_threshold: Optional[int]
    cos_margin: float
    near_degenerate: bool


def phi_kappa_checks(lam, xi: float, kappa: float, theta: float, window: Optional[Tuple[int, int]] = None) -> PhiKappaReport:
    """Window bounds of ``(n ln n lnln n)^kappa / Re psi^kappa(lambda_n)`` and positivity.

    ``lam`` holds ``lambda_1, lambda_2, ...``.  The positivity threshold is the
    first index after which every ``Re psi^kappa(lambda_n)`` is positive.
    """
    prod = xi * kappa * theta
    if prod >= math.pi / 2:
        raise ZooError(f"xi*kappa*theta = {prod:.6f} is not below pi/2")
    lam = np.asarray(lam, dtype=complex)
    phi = log_composite(xi, kappa)
    # psi is only used where |lambda| > e; smaller entries count as non-positive
    re = np.array([phi(complex(x)).real if abs(x) > math.e else -np.inf for x in lam])
    n = np.arange(1, lam.size + 1, dtype=float)
    lo, hi = window if window else (3, lam.size)
    if lo < 3:
        raise ZooError("window must start at n >= 3 (ln ln n > 0)")
    sl = slice(lo - 1, hi)
    if np.any(~np.isfinite(re[sl])):
        raise ZooError("window contains |lambda_n| <= e")
    ratio = (n[sl] * np.log(n[sl]) * np.log(np.log(n[sl]))) ** kappa / re[sl]
    bad = np.nonzero(re <= 0)[0]
    threshold = int(bad[-1] + 2) if bad.size else 1
    if threshold > lam.size:
        threshold = None
    cos_margin = math.cos(prod)
    return PhiKappaReport((lo, hi), float(ratio.min()), float(ratio.max()), threshold, cos_margin, cos_margin < 1e-2)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def phase_constructed(s_seq, theta: float, seed: int = 0, eta: float = 0.5,
                      unitary: Optional[np.ndarray] = None, retries: int = 100) -> ZooModel:
    """``B = U |B|`` with prescribed singular values and a capped phase.

    ``|B| = Q diag(s) Q^*`` for a random unitary ``Q``.  ``U = Q exp(i(Phi + eta X)) Q^*``
    where ``Phi`` holds phases in ``[-theta/2, theta/2]`` and ``X`` is a random
    Hermitian perturbation of unit norm; ``eta`` is halved until the result
    passes the sector test at ``theta``.  A given ``unitary`` is used as is.
    """
    if not 0 < theta < math.pi / 2:
        raise ZooError("theta must lie in (0, pi/2)")
    s = np.sort(np.asarray(s_seq, dtype=float))[::-1]
    if np.any(s <= 0):
        raise ZooError("singular values must be positive")
    n = s.size
    rng = np.random.default_rng(seed)
    q = random_unitary(n, rng)
    absb = (q * s) @ q.conj().T
    spec = SectorSpec(theta)
    if unitary is not None:
        b = as_operator(unitary) @ absb
        return ZooModel("phase_constructed", {"theta": theta, "seed": seed}, None, b,
                        metadata={"eta": None, "certified": bool(sector_check(b, spec))})
    phases = rng.uniform(-theta / 2, theta / 2, n)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x = (x + x.conj().T) / 2
    x /= np.linalg.norm(x, 2)
    for _ in range(retries):
        u = q @ sla.expm(1j * (np.diag(phases) + eta * x)) @ q.conj().T
        b = u @ absb
        if sector_check(b, spec):
            w = np.linalg.inv(b)
            return ZooModel("phase_constructed", {"theta": theta, "seed": seed}, w, b,
                            metadata={"eta": eta, "certified": True})
        eta /= 2
    raise ZooError("phase construction failed the sector test after all retries")


@dataclass
class CompactnessReport:
    k_grid: List[int]
    margins: np.ndarray
    holds: bool


def embedding_compactness_check(phi_values, f_samples, k_grid) -> CompactnessReport:
    """``sum_{n>=k} |phi_n|^-1 |f_n|^2 <= ||f||^2 / |phi_k|`` after sorting ``|phi|`` upward."""
    mags = np.abs(np.asarray(phi_values, dtype=complex))
    if np.any(mags <= 0):
        raise ZooError("phi values must be nonzero")
    order = np.argsort(mags, kind="stable")
    mags = mags[order]
    if np.any(np.diff(mags) < 0):
        raise ZooError("phi values are not monotone after rearrangement")
    fs = np.atleast_2d(np.asarray(f_samples, dtype=complex))[:, order]
    margins = []
    for f in fs:
        w = np.abs(f) ** 2 / mags
        tails = np.cumsum(w[::-1])[::-1]
        total = np.sum(np.abs(f) ** 2)
        for k in k_grid:
            margins.append(total / mags[k - 1] - tails[k - 1])
    margins = np.array(margins)
    scale = max(1.0, float(np.max(np.abs(fs)) ** 2))
    return CompactnessReport(list(k_grid), margins, bool(np.all(margins >= -1e-12 * scale)))


@dataclass
class RealComponentCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    max_error: float

    @property
    def holds(self) -> bool:
        return self.max_error <= 1e-10 * max(1.0, float(np.max(np.abs(self.rhs))))


def real_component_eigen_check(w, phi) -> RealComponentCheck:
    """Eigenvalues of ``Re phi(W)`` against ``Re phi(lambda_n)`` for normal ``W``."""
    w = as_operator(w)
    scale = max(np.linalg.norm(w, 2), 1e-300)
    if np.linalg.norm(w @ w.conj().T - w.conj().T @ w, 2) > 1e-10 * scale ** 2:
        raise ZooError("operator is not normal")
    t, q = sla.schur(w, output="complex")
    lam = np.diag(t)
    vals = np.array([phi(complex(x)) for x in lam])
    pw = (q * vals) @ q.conj().T
    re = (pw + pw.conj().T) / 2
    lhs = np.sort(np.linalg.eigvalsh(re))
    rhs = np.sort(vals.real)
    return RealComponentCheck(lhs, rhs, float(np.max(np.abs(lhs - rhs))))


def jordan_model(blocks: Sequence[Tuple[complex, int]], seed: int = 0, eps: float = 0.02,
                 spread: float = 0.05) -> ZooModel:
    """``B = S J_eps S^-1`` with a near-unitary ``S`` and declared root system.

    ``J_eps`` carries ``eps`` on the superdiagonal of each block; the declared
    chains are the columns of ``S`` rescaled by powers of ``1/eps`` so that
    ``(B - mu) e_{j+1} = e_j`` holds exactly.
    """
    rng = np.random.default_rng(seed)
    n = sum(int(k) for _, k in blocks)
    q = random_unitary(n, rng)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = q @ (np.eye(n) + spread * x / np.linalg.norm(x, 2))
    j = jordan_matrix(blocks)
    j[np.triu_indices(n, 1)] *= eps
    b = s @ j @ np.linalg.inv(s)
    chains_s = s.copy()
    pos = 0
    for _, k in blocks:
        for i in range(k):
            chains_s[:, pos + i] /= eps ** i
        pos += k
    rs = root_system_from_structure(blocks, chains_s)
    theta = sector_angle(b)
    if theta >= math.pi / 2:
        raise ZooError("constructed operator is not sectorial; lower spread or eps")
    w = np.linalg.inv(b)
    return ZooModel("jordan_model", {"blocks": [(complex(m), int(k)) for m, k in blocks], "seed": seed,
                                     "eps": eps, "spread": spread},
                    w, b, [(complex(m), int(k)) for m, k in blocks], rs, {"theta": theta})


CORPUS_BLOCKS = [
    [(0.3, 2), (0.2, 1)],
    [(0.25, 3), (0.15, 2), (0.1, 1)],
    [(0.3, 1), (0.22, 2), (0.22, 1), (0.12, 3)],
    [(0.28, 2), (0.2, 2), (0.14, 2), (0.1, 2), (0.26, 1), (0.16, 1)],
    [(0.3, 3), (0.24, 3), (0.18, 3), (0.12, 3)],
    [(0.29, 1), (0.27, 1), (0.23, 1), (0.19, 1), (0.17, 1), (0.13, 1), (0.11, 1)],
]


def corpus(seed: int = 0) -> List[ZooModel]:
    """Desk-scale corpus: Jordan models, a Sturm-Liouville and a phase-constructed truncation."""
    models = [jordan_model(bl, seed=seed + i) for i, bl in enumerate(CORPUS_BLOCKS)]
    sl = sturm_liouville(12)
    sl.metadata["theta"] = 0.0
    models.append(sl)
    m = np.arange(1, 11, dtype=float)
    s = 0.3 * (m * np.log(m + 1)) ** (-1 / 1.5) / (np.log(2) ** (-1 / 1.5))
    pc = phase_constructed(s, 0.3, seed=seed)
    pc.metadata["theta"] = sector_angle(pc.b)
    models.append(pc)
    return models


def build(variant: str, **params) -> ZooModel:
    """Dispatch on a variant tag (used by the config runner and the CLI)."""
    v = variant.lower()
    if v == "sturm_liouville":
        return sturm_liouville(int(params.get("N", 8)))
    if v == "elliptic2d":
        return elliptic2d(complex(params.get("a2", 1)), complex(params.get("a0", 0)), int(params.get("N", 4)))
    if v == "subtle_diagonal":
        return subtle_diagonal(float(params.get("kappa", 1)), float(params.get("q", 15)), int(params.get("N", 64)))
    if v == "diagonal":
        vals = params.get("values", "1,2")
        if isinstance(vals, str):
            vals = [complex(x) for x in vals.split(",")]
        return _diag_model("diagonal", {"values": list(vals)}, vals)
    if v == "jordan_model":
        blocks = params.get("blocks", "0.3:2,0.2:1")
        if isinstance(blocks, str):
            blocks = [(complex(a), int(b)) for a, b in (x.split(":") for x in blocks.split(","))]
        return jordan_model(blocks, int(params.get("seed", 0)), float(params.get("eps", 0.02)))
    if v == "phase_constructed":
        n = int(params.get("N", 10))
        rho = float(params.get("rho", 1.5))
        m = np.arange(1, n + 1, dtype=float)
        s = float(params.get("scale", 0.3)) * (m * np.log(m + 1)) ** (-1 / rho) / (np.log(2) ** (-1 / rho))
        return phase_constructed(s, float(params.get("theta", 0.3)), int(params.get("seed", 0)))
    raise ZooError(f"unknown or matrix-free variant {variant!r}")
