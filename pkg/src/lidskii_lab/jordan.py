"""Numerical Jordan structure: chains, root systems and biorthogonal duals.

Chains are extracted per eigenvalue cluster.  A sorted complex Schur form
isolates the cluster's invariant subspace, and a staircase over the kernels of
powers of the shifted block determines the chain lengths.  Chain vectors are
built top-down as ``e_j = A^{k-j} x`` so that the relations
``(B - mu) e_{j+1} = e_j`` hold by construction and only the eigenvector
equation carries a rounding residual.

Structurally known operators skip all of this through
:func:`root_system_from_structure`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .operators import as_operator

DEFAULT_TOL = 1e-5


class JordanError(ValueError):
    """Chain extraction failed; the message names the eigenvalue cluster."""


@dataclass
class JordanChain:
    """Vectors ``e_1..e_k`` (columns) with ``(B - mu) e_1 = 0`` and
    ``(B - mu) e_{j+1} = e_j``."""
    eigenvalue: complex
    vectors: np.ndarray

    @property
    def length(self) -> int:
        return self.vectors.shape[1]


@dataclass
class RootSystem:
    chains: List[JordanChain]
    dim: int
    method: str = "numerical"
    metadata: dict = field(default_factory=dict)

    @property
    def nu_total(self) -> int:
        return sum(c.length for c in self.chains)

    def groups(self) -> Dict[complex, List[int]]:
        """Chain indices grouped by eigenvalue (in chain order)."""
        out: Dict[complex, List[int]] = {}
        for i, c in enumerate(self.chains):
            out.setdefault(complex(c.eigenvalue), []).append(i)
        return out

    def geometric_multiplicity(self) -> Dict[complex, int]:
        return {mu: len(ix) for mu, ix in self.groups().items()}

    def algebraic_multiplicity(self) -> Dict[complex, int]:
        return {mu: sum(self.chains[i].length for i in ix) for mu, ix in self.groups().items()}

    def characteristic_numbers(self) -> List[complex]:
        """``lambda_q = 1/mu_q`` per chain (``inf`` for a zero eigenvalue)."""
        return [1.0 / c.eigenvalue if c.eigenvalue != 0 else complex("inf") for c in self.chains]

    def matrix(self) -> np.ndarray:
        """All chain vectors as columns, chain by chain."""
        return np.hstack([c.vectors for c in self.chains])

    def index_map(self) -> List[Tuple[int, int]]:
        """``(chain, position)`` for every column of :meth:`matrix`."""
        return [(q, j) for q, c in enumerate(self.chains) for j in range(c.length)]

    def chain_slices(self) -> List[slice]:
        out, start = [], 0
        for c in self.chains:
            out.append(slice(start, start + c.length))
            start += c.length
        return out

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix()))

    def residuals(self, b) -> List[float]:
        """Relative chain residual ``||(B-mu)e_{j+1} - e_j|| / (||B|| ||e_{j+1}||)`` per chain."""
        b = as_operator(b)
        nb = max(np.linalg.norm(b, 2), 1e-300)
        out = []
        for c in self.chains:
            a = b - c.eigenvalue * np.eye(b.shape[0])
            worst = 0.0
            for j in range(c.length):
                r = a @ c.vectors[:, j]
                if j:
                    r = r - c.vectors[:, j - 1]
                worst = max(worst, np.linalg.norm(r) / (nb * np.linalg.norm(c.vectors[:, j])))
            out.append(float(worst))
        return out

    def to_json(self) -> str:
        mult = self.algebraic_multiplicity()
        geo = self.geometric_multiplicity()
        doc = {
            "dim": self.dim,
            "method": self.method,
            "metadata": self.metadata,
            "chains": [
                {"eigenvalue": [c.eigenvalue.real, c.eigenvalue.imag],
                 "vectors": [[[z.real, z.imag] for z in c.vectors[:, j]] for j in range(c.length)]}
                for c in self.chains
            ],
            "multiplicities": [
                {"eigenvalue": [mu.real, mu.imag], "algebraic": mult[mu], "geometric": geo[mu]}
                for mu in mult
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "RootSystem":
        doc = json.loads(text)
        chains = []
        for c in doc["chains"]:
            vecs = np.array([[complex(re, im) for re, im in v] for v in c["vectors"]]).T
            chains.append(JordanChain(complex(*c["eigenvalue"]), vecs))
        return cls(chains, int(doc["dim"]), doc.get("method", "numerical"), doc.get("metadata", {}))


def cluster_eigenvalues(w: np.ndarray, radius: float) -> List[np.ndarray]:
    """Single-linkage clusters of eigenvalues closer than ``radius``."""
    n = w.size
    label = -np.ones(n, dtype=int)
    k = 0
    for i in range(n):
        if label[i] >= 0:
            continue
        stack = [i]
        label[i] = k
        while stack:
            j = stack.pop()
            near = np.nonzero((np.abs(w - w[j]) <= radius) & (label < 0))[0]
            label[near] = k
            stack.extend(near.tolist())
        k += 1
    return [np.nonzero(label == c)[0] for c in range(k)]


def _orth_complement_tops(kernel: np.ndarray, avoid: np.ndarray, count: int) -> np.ndarray:
    """``count`` orthonormal directions of ``kernel`` independent of ``avoid``."""
    if avoid.shape[1]:
        qa, _ = np.linalg.qr(avoid)
        proj = kernel - qa @ (qa.conj().T @ kernel)
    else:
        proj = kernel
    u, s, _ = np.linalg.svd(proj, full_matrices=False)
    return u[:, :count]


def _kernel(a: np.ndarray, thr: float):
    """Orthonormal kernel basis of ``a`` (singular values below ``thr``)."""
    _, s, vh = np.linalg.svd(a)
    rank = int(np.sum(s > thr))
    return vh[rank:].conj().T


def _cluster_chains(t11: np.ndarray, mu: complex, thr: float, label: str) -> List[np.ndarray]:
    k = t11.shape[0]
    a = t11 - mu * np.eye(k)
    kernels = [np.zeros((k, 0), dtype=complex)]
    power = np.eye(k, dtype=complex)
    scale = max(np.linalg.norm(a, 2), 1.0)
    while kernels[-1].shape[1] < k:
        power = power @ a
        ker = _kernel(power, thr * scale ** len(kernels))
        if ker.shape[1] <= kernels[-1].shape[1]:
            raise JordanError(f"staircase stalled for eigenvalue cluster near {mu:.6g} ({label})")
        kernels.append(ker)
        if len(kernels) > k + 1:
            raise JordanError(f"shifted block is not nilpotent near {mu:.6g} ({label})")
    dims = [kk.shape[1] for kk in kernels]
    steps = np.diff(dims)
    if np.any(np.diff(steps) > 0):
        raise JordanError(f"inconsistent kernel staircase {dims} near {mu:.6g} ({label})")
    depth = len(kernels) - 1
    chains: List[np.ndarray] = []
    for level in range(depth, 0, -1):
        need = steps[level - 1] - (steps[level] if level < depth else 0)
        if need <= 0:
            continue
        # images of chains already started, at this level
        carried = [ch[:, level - 1] for ch in chains if ch.shape[1] > level - 1]
        avoid = np.column_stack([kernels[level - 1]] + carried) if carried else kernels[level - 1]
        tops = _orth_complement_tops(kernels[level], avoid, need)
        for x in tops.T:
            vecs = [x]
            for _ in range(level - 1):
                vecs.append(a @ vecs[-1])
            chains.append(np.column_stack(vecs[::-1]))
    # chains as stored have column j = A^(len-1-j) x; reorder is e_1 first
    out = []
    for ch in chains:
        out.append(ch / np.linalg.norm(ch[:, 0]))
    return out


def jordan_decompose(b, tol: float = DEFAULT_TOL) -> RootSystem:
    """Numerical Jordan structure of a dense matrix.

    Eigenvalues within ``tol*||b||`` are merged into one cluster; ranks in the
    staircase are decided at ``tol`` relative to the block norm.  Raises
    :class:`JordanError` naming the cluster when a chain residual exceeds
    ``tol`` or the chain vectors fail to span the space.
    """
    b = as_operator(b)
    n = b.shape[0]
    nb = np.linalg.norm(b, 2)
    scale = nb if nb > 0 else 1.0
    w = np.linalg.eigvals(b)
    clusters = cluster_eigenvalues(w, tol * scale)
    chains: List[JordanChain] = []
    if all(idx.size == 1 for idx in clusters):
        # simple spectrum: eigenvectors are the whole story
        w, v = np.linalg.eig(b)
        v = v / np.linalg.norm(v, axis=0)
        chains = [JordanChain(complex(w[i]), v[:, i:i + 1]) for i in range(n)]
        clusters = []
    for idx in clusters:
        members = w[idx]
        mu = complex(np.mean(members))
        spread = float(np.max(np.abs(members - mu)))
        others = np.delete(w, idx)
        gap = float(np.min(np.abs(others - mu))) if others.size else np.inf
        radius = min(max(4 * spread, 10 * np.finfo(float).eps * scale), gap / 2)
        label = f"cluster of {idx.size} eigenvalue(s)"
        t, q, sdim = sla.schur(b, output="complex", sort=lambda x, mu=mu, r=radius: abs(x - mu) <= r)
        if sdim != idx.size:
            raise JordanError(f"Schur reordering isolated {sdim} of {idx.size} eigenvalues near {mu:.6g}")
        local = _cluster_chains(t[:sdim, :sdim], mu, tol, label)
        if idx.size == 1:
            mu = complex(t[0, 0])
        for ch in local:
            chains.append(JordanChain(mu, q[:, :sdim] @ ch))
    chains.sort(key=lambda c: (-abs(c.eigenvalue), c.eigenvalue.real, c.eigenvalue.imag, -c.length))
    rs = RootSystem(chains, n, "numerical", {"tol": tol})
    res = rs.residuals(b)
    for c, r in zip(chains, res):
        if r > tol:
            raise JordanError(f"chain residual {r:.3e} exceeds tol for eigenvalue cluster near {c.eigenvalue:.6g}")
    if rs.nu_total != n:
        raise JordanError(f"root system has {rs.nu_total} vectors for dimension {n}")
    e = rs.matrix()
    sv = np.linalg.svd(e, compute_uv=False)
    if sv[-1] <= tol * sv[0]:
        raise JordanError("chain vectors are numerically dependent")
    return rs


def jordan_matrix(blocks: Sequence[Tuple[complex, int]]) -> np.ndarray:
    """Block-diagonal Jordan matrix with upper unit superdiagonals."""
    n = sum(int(s) for _, s in blocks)
    j = np.zeros((n, n), dtype=complex)
    pos = 0
    for mu, size in blocks:
        for i in range(size):
            j[pos + i, pos + i] = mu
            if i:
                j[pos + i - 1, pos + i] = 1.0
        pos += size
    return j


def root_system_from_structure(blocks: Sequence[Tuple[complex, int]], s) -> RootSystem:
    """Root system of ``B = S J S^-1`` read off the columns of ``S``."""
    s = as_operator(s)
    chains = []
    pos = 0
    for mu, size in blocks:
        chains.append(JordanChain(complex(mu), s[:, pos:pos + size].copy()))
        pos += size
    if pos != s.shape[0]:
        raise JordanError("block sizes do not add up to the dimension of S")
    return RootSystem(chains, s.shape[0], "declared", {"blocks": [[complex(m).real, complex(m).imag, int(k)]
                                                                  for m, k in blocks]})


@dataclass
class BiorthogonalSystem:
    """Dual vectors ``g`` stored column-aligned with the root system.

    ``pairing[i]`` is the column whose ``g`` pairs with ``e_i``: inside a chain
    of length ``k+1`` position ``i`` pairs with position ``k-i``.  The
    convention normalises every mirrored pairing ``(e_i, g_{k-i})`` to one.
    """
    g: np.ndarray
    pairing: np.ndarray
    cross_group_max: float
    convention: str = "unit mirrored pairing"


def biorthogonal_system(rs: RootSystem, b=None, tol: float = 1e-10) -> BiorthogonalSystem:
    """Dual chains of ``b^*`` paired at mirrored positions.

    With ``F = (E^-1)^*`` one has ``(e_i, f_j) = delta_ij``; setting
    ``g_{k-i} = f_i`` inside every chain turns each chain of ``F`` into a
    Jordan chain of ``b^*`` for the conjugate eigenvalue.
    """
    e = rs.matrix()
    try:
        f = np.linalg.inv(e).conj().T
    except np.linalg.LinAlgError as exc:
        raise JordanError("root vectors are linearly dependent") from exc
    g = np.empty_like(f)
    pairing = np.empty(e.shape[1], dtype=int)
    for sl in rs.chain_slices():
        cols = np.arange(sl.start, sl.stop)
        g[:, cols] = f[:, cols[::-1]]
        pairing[cols] = cols[::-1]
    gram = g.conj().T @ e  # gram[j, i] = (e_i, g_j)
    groups = np.empty(e.shape[1], dtype=complex)
    for c, sl in zip(rs.chains, rs.chain_slices()):
        groups[sl] = c.eigenvalue
    cross = np.not_equal.outer(groups, groups)
    cross_max = float(np.abs(gram[cross]).max()) if cross.any() else 0.0
    scale = np.linalg.norm(e, 2) * np.linalg.norm(f, 2)
    for i, j in enumerate(pairing):
        if abs(gram[j, i]) < tol:
            q, pos = rs.index_map()[i]
            raise JordanError(f"vanishing pairing in chain {q} at position {pos}")
    if cross_max > tol * max(scale, 1.0):
        raise JordanError(f"cross-group pairing {cross_max:.3e} does not vanish")
    return BiorthogonalSystem(g, pairing, cross_max)


def coefficients_c0(f, rs: RootSystem, bs: BiorthogonalSystem) -> np.ndarray:
    """``c_i = (f, g_{k-i}) / (e_i, g_{k-i})`` for every root vector."""
    f = np.asarray(f, dtype=complex)
    e = rs.matrix()
    gp = bs.g[:, bs.pairing]
    num = gp.conj().T @ f
    den = np.einsum("ij,ij->j", gp.conj(), e)
    if np.any(den == 0):
        raise JordanError("zero pairing denominator")
    return num / den
