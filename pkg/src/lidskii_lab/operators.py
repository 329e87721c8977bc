"""Dense complex operators: Hermitian splitting, sector tests and the
singular-value estimate suite for sectorial matrices.

Operators are plain ``numpy`` arrays of complex dtype; :func:`as_operator`
validates and normalises input.  Inner products are ``(x, y) = y^* x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as sla

PSD_RTOL = 1e-10
SQRT_CLIP = 1e-12


class OperatorError(ValueError):
    """Raised for malformed operators or violated preconditions."""


def as_operator(b) -> np.ndarray:
    a = np.asarray(b, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise OperatorError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise OperatorError("operator has non-finite entries")
    return a


def inner(x, y) -> complex:
    return complex(np.vdot(y, x))


@dataclass(frozen=True)
class SectorSpec:
    """Closed sector ``|arg(z - vertex)| <= semi_angle``."""
    semi_angle: float
    vertex: float = 0.0

    def __post_init__(self):
        if not 0 <= self.semi_angle < math.pi / 2:
            raise OperatorError(f"semi-angle must lie in [0, pi/2), got {self.semi_angle}")


@dataclass(frozen=True)
class HermitianSplit:
    re_part: np.ndarray
    im_part: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.re_part + 1j * self.im_part


@dataclass(frozen=True)
class SectorFactorization:
    """``W = H^{1/2} (I + iG) H^{1/2}`` with ``H >= 0`` and ``G`` Hermitian."""
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name, m in (("h", self.h), ("g", self.g)):
            m = as_operator(m)
            if not np.allclose(m, m.conj().T, atol=1e-12 * max(1.0, np.abs(m).max())):
                raise OperatorError(f"{name} must be Hermitian")
        if self.h.shape != self.g.shape:
            raise OperatorError("h and g must have equal shape")

    @property
    def h_sqrt(self) -> np.ndarray:
        return psd_sqrt(self.h)

    def assemble(self) -> np.ndarray:
        s = self.h_sqrt
        n = s.shape[0]
        return s @ (np.eye(n) + 1j * np.asarray(self.g, dtype=complex)) @ s


@dataclass
class ProbeReport:
    c1_estimate: float
    c2_estimate: float
    sample_count: int

    @property
    def verdict(self) -> str:
        return "pass" if self.c2_estimate > 0 else "fail"


def hermitian_split(b) -> HermitianSplit:
    b = as_operator(b)
    bh = b.conj().T
    return HermitianSplit((b + bh) / 2, (b - bh) / 2j)


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def min_eig(a: np.ndarray):
    """Smallest eigenvalue and its eigenvector of a Hermitian matrix."""
    w, v = np.linalg.eigh(hermitize(a))
    return w[0], v[:, 0]


def is_psd(a: np.ndarray, rtol: float = PSD_RTOL) -> bool:
    lam, _ = min_eig(a)
    scale = max(np.linalg.norm(a, 2), 1e-300)
    return lam >= -rtol * scale


def psd_sqrt(h) -> np.ndarray:
    """Hermitian square root; eigenvalues in ``[-1e-12, 0)`` are clipped."""
    h = hermitize(as_operator(h))
    w, v = np.linalg.eigh(h)
    scale = max(1.0, abs(w).max())
    if w[0] < -SQRT_CLIP * scale:
        raise OperatorError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass
class SectorCheck:
    inside: bool
    witness: Optional[np.ndarray] = None
    margin: float = 0.0

    def __bool__(self):
        return self.inside


def sector_check(b, s: SectorSpec) -> SectorCheck:
    """Exact test of ``Theta(b) in {|arg(z - vertex)| <= theta}``.

    Holds iff ``tan(theta) Re b -+ Im b`` are both positive semidefinite
    (and ``Re b >= 0`` when ``theta = 0``).  On failure a unit vector ``f``
    with ``(b f, f)`` outside the sector is returned as witness.
    """
    b = as_operator(b)
    if s.vertex:
        b = b - s.vertex * np.eye(b.shape[0])
    sp = hermitian_split(b)
    t = math.tan(s.semi_angle)
    scale = max(np.linalg.norm(b, 2), 1e-300)
    candidates = [t * sp.re_part - sp.im_part, t * sp.re_part + sp.im_part, sp.re_part]
    worst = math.inf
    witness = None
    for m in candidates:
        lam, vec = min_eig(m)
        worst = min(worst, lam / scale)
        if lam < -PSD_RTOL * scale and witness is None:
            witness = vec / np.linalg.norm(vec)
    return SectorCheck(witness is None, witness, worst)


def sector_angle(b) -> float:
    """Smallest semi-angle of a vertex-0 sector containing ``Theta(b)``.

    Returns ``pi/2`` when ``Re b`` is not positive definite.
    """
    sp = hermitian_split(as_operator(b))
    w, v = np.linalg.eigh(sp.re_part)
    if w[0] <= 0:
        return math.pi / 2
    ri = (v / np.sqrt(w)) @ v.conj().T
    m = hermitize(ri @ sp.im_part @ ri)
    return math.atan(np.abs(np.linalg.eigvalsh(m)).max())


def singular_values(b) -> np.ndarray:
    """Singular values in non-increasing order."""
    return np.linalg.svd(as_operator(b), compute_uv=False)


@dataclass
class Violation:
    kind: str
    indices: tuple
    lhs: float
    rhs: float


@dataclass
class KyFanReport:
    theta: float
    instances: int = 0
    violations: List[Violation] = field(default_factory=list)
    margins: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check(report, kind, idx, lhs, rhs, rtol=1e-10):
    report.instances += 1
    margin = rhs - lhs
    report.margins.setdefault(kind, []).append(float(margin))
    if lhs > rhs + rtol * max(1.0, abs(rhs), abs(lhs)):
        report.violations.append(Violation(kind, idx, float(lhs), float(rhs)))


def kyfan_suite(b, s: SectorSpec, check_sector: bool = True) -> KyFanReport:
    """Check the singular-value inequalities for a sectorial matrix.

    Instances:

    * ``kyfan``: ``s_{m+n-1}(Re^2 + Im^2) <= s_m(Re^2) + s_n(Im^2)``
    * ``re_square``: ``lambda_n(Re^2) = lambda_n(Re)^2`` (magnitude-sorted)
    * ``im_vs_re``: ``lambda_n(+-Im) <= tan(theta) lambda_n(Re)``, eigenvalues
      of each side in non-increasing order
    * ``odd`` / ``even``: ``s_{2m-1}(b), s_{2m}(b) <= sqrt(2) sec(theta) s_m(Re b)``
    """
    b = as_operator(b)
    if check_sector and not sector_check(b, s):
        raise OperatorError("operator is not inside the declared sector")
    if s.vertex:
        b = b - s.vertex * np.eye(b.shape[0])
    n = b.shape[0]
    sp = hermitian_split(b)
    re2 = sp.re_part @ sp.re_part
    im2 = sp.im_part @ sp.im_part
    s_sum = singular_values(re2 + im2)
    s_re2 = singular_values(re2)
    s_im2 = singular_values(im2)
    rep = KyFanReport(theta=s.semi_angle)
    for m in range(1, n + 1):
        for k in range(1, n + 2 - m):
            _check(rep, "kyfan", (m, k), s_sum[m + k - 2], s_re2[m - 1] + s_im2[k - 1])

    lam_re = np.linalg.eigvalsh(sp.re_part)[::-1]
    lam_im = np.linalg.eigvalsh(sp.im_part)[::-1]
    sq = np.sort(lam_re ** 2)[::-1]
    lam_re2 = np.linalg.eigvalsh(hermitize(re2))[::-1]
    for i in range(n):
        _check(rep, "re_square", (i + 1,), abs(lam_re2[i] - sq[i]), 1e-10 * max(1.0, sq[0]))
    t = math.tan(s.semi_angle)
    neg_im = (-lam_im)[::-1]
    for i in range(n):
        _check(rep, "im_vs_re", (i + 1, "+"), lam_im[i], t * lam_re[i])
        _check(rep, "im_vs_re", (i + 1, "-"), neg_im[i], t * lam_re[i])

    sb = singular_values(b)
    s_re = singular_values(sp.re_part)
    c = math.sqrt(2) / math.cos(s.semi_angle)
    for m in range(1, n + 1):
        if 2 * m - 1 <= n:
            _check(rep, "odd", (m,), sb[2 * m - 2], c * s_re[m - 1])
        if 2 * m <= n:
            _check(rep, "even", (m,), sb[2 * m - 1], c * s_re[m - 1])
    return rep


@dataclass
class SectorNormCriteria:
    lhs: float
    rhs_bound: float
    norm_below_one: bool
    lambda_min: float
    theta: float
    implication_applies: bool
    implication_holds: Optional[bool]


def hs_weighted_norm(f: SectorFactorization) -> float:
    """``(sum_{n,k} |b_nk|^2 lambda_n / lambda_k)^{1/2}`` in the eigenbasis of h.

    This is the Hilbert-Schmidt norm of ``H^{1/2} G H^{-1/2}``.
    """
    lam, v = np.linalg.eigh(hermitize(as_operator(f.h)))
    if lam[0] <= 0:
        raise OperatorError("h must be positive definite")
    bmat = v.conj().T @ np.asarray(f.g, dtype=complex) @ v
    ratio = lam[:, None] / lam[None, :]
    return float(np.sqrt(np.sum(np.abs(bmat) ** 2 * ratio)))


def sector_norm_bound(theta: float, lambda_min: float) -> float:
    """``0.5*sqrt((ctg(theta)/l1)**2 + 4) - ctg(theta)/l1``; equals 1 at theta = pi/2."""
    if theta >= math.pi / 2:
        c = 0.0
    else:
        c = (math.cos(theta) / math.sin(theta)) / lambda_min if theta > 0 else math.inf
    if math.isinf(c):
        return -math.inf
    return 0.5 * math.sqrt(c * c + 4) - c


def sector_norm_criteria(f: SectorFactorization, s: SectorSpec) -> SectorNormCriteria:
    """Matrix-coefficient sector criteria for ``W = H^{1/2}(I+iG)H^{1/2}``.

    When ``lhs < rhs_bound`` and the smallest eigenvalue of ``h`` is at most 1
    the assembled ``W`` is checked to lie in the sector of semi-angle theta.
    For ``lambda_1 > 1`` the bound no longer controls ``||G||`` against
    ``tan(theta)`` and the implication is reported as not applicable.
    """
    lam = np.linalg.eigvalsh(hermitize(as_operator(f.h)))
    if lam[0] <= 0:
        raise OperatorError("h must be positive definite (singular h rejected)")
    lhs = hs_weighted_norm(f)
    rhs = sector_norm_bound(s.semi_angle, lam[0])
    applies = bool(lhs < rhs and lam[0] <= 1.0)
    holds = None
    if lhs < rhs:
        holds = bool(sector_check(f.assemble(), SectorSpec(s.semi_angle)))
    return SectorNormCriteria(lhs, rhs, lhs < 1.0, float(lam[0]), s.semi_angle, applies, holds)


@dataclass
class WSquareIdentity:
    re_w2: float
    re_rhs: float
    im_w2: float
    im_rhs: float
    im_printed: float

    def rel_errors(self):
        scale = max(abs(self.re_w2), abs(self.re_rhs), abs(self.im_w2), abs(self.im_rhs), 1e-300)
        return abs(self.re_w2 - self.re_rhs) / scale, abs(self.im_w2 - self.im_rhs) / scale


def w_square_identity(f: SectorFactorization, sample) -> WSquareIdentity:
    """Both sides of the quadratic-form identities for ``W^2``.

    ``Re(W^2 x, x) = ||H x||^2 - ||H^{1/2} G H^{1/2} x||^2`` and
    ``Im(W^2 x, x) = 2 Re(H^{1/2} G H^{1/2} x, H x)``.  The field ``im_printed``
    carries ``Re(H^{1/2} G H^{1/2} x, H^{1/2} x)`` for comparison; it is not
    equal to ``Im(W^2 x, x)`` in general.
    """
    x = np.asarray(sample, dtype=complex)
    h = hermitize(as_operator(f.h))
    if x.shape != (h.shape[0],):
        raise OperatorError("sample dimension mismatch")
    s = psd_sqrt(h)
    w = f.assemble()
    k = s @ np.asarray(f.g, dtype=complex) @ s
    q = inner(w @ (w @ x), x)
    hx = h @ x
    kx = k @ x
    return WSquareIdentity(
        re_w2=q.real,
        re_rhs=float(np.vdot(hx, hx).real - np.vdot(kx, kx).real),
        im_w2=q.imag,
        im_rhs=2 * inner(kx, hx).real,
        im_printed=inner(kx, s @ x).real,
    )


def h1h2_probe(l, plus_gram, samples: int = 200, seed: int = 0) -> ProbeReport:
    """Sampled estimates of the continuity and coercivity constants.

    ``c1 = max |(L f, g)|`` and ``c2 = min Re (L f, f)`` over random ``f, g``
    with ``(P f, f) = 1``; pairs with ``g = f`` are included.
    """
    l = as_operator(l)
    p = hermitize(as_operator(plus_gram))
    w, v = np.linalg.eigh(p)
    if w[0] <= 0:
        raise OperatorError("plus_gram must be positive definite")
    n = l.shape[0]
    rng = np.random.default_rng(seed)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    z = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    fs = z @ inv_sqrt.T
    lf = fs @ l.T
    gram = lf @ fs.conj().T  # entry (i, j) = (L f_i, f_j)
    c1 = float(np.abs(gram).max())
    c2 = float(np.diag(gram).real.min())
    return ProbeReport(c1, c2, samples)


@dataclass
class SquareMonitor:
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    monotone: bool


def hermitian_square_monitor(b) -> SquareMonitor:
    """Eigenvalues of ``(A^2 + A*^2)/2`` against ``1/lambda_n(Re W^2)``.

    ``A = b`` and ``W = b^{-1}``; both sequences are sorted non-increasing
    before the ratios are formed.  The monitor only reports.
    """
    a = as_operator(b)
    try:
        w = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise OperatorError("singular operator") from exc
    if np.linalg.cond(a) > 1e14:
        raise OperatorError("singular operator")
    ah = a.conj().T
    lhs = np.linalg.eigvalsh(hermitize((a @ a + ah @ ah) / 2))[::-1]
    rew2 = np.linalg.eigvalsh(hermitize(hermitian_split(w @ w).re_part))
    rhs = 1.0 / rew2
    rhs = np.sort(rhs)[::-1]
    ratios = lhs / rhs
    d = np.diff(ratios)
    monotone = bool(np.all(d >= -1e-12 * abs(ratios).max()) or np.all(d <= 1e-12 * abs(ratios).max()))
    return SquareMonitor(lhs, rhs, ratios, monotone)
