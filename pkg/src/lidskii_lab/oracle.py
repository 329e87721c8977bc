"""Reference implementations used to cross-check the series and contour engines.

Nothing here shares code with the jet engine: derivatives come from Cauchy
integrals on small circles, and matrix functions from Hermite interpolation in
Newton form or from scipy's ``expm``/``fractional_matrix_power``.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence, Tuple

import numpy as np
import scipy.linalg as sla


def taylor_coefficients(h: Callable[[complex], complex], x0: complex, order: int,
                        radius: float, nodes: int = 64) -> np.ndarray:
    """``h^(m)(x0)/m!`` for ``m = 0..order`` by the trapezoid rule on a circle."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    pts = x0 + radius * np.exp(1j * theta)
    vals = np.array([h(complex(p)) for p in pts])
    m = np.arange(order + 1)
    return (np.exp(-1j * np.outer(m, theta)) @ vals) / nodes / radius ** m


def hermite_newton(nodes: Sequence[Tuple[complex, int]], taylor: Sequence[np.ndarray]):
    """Newton-form coefficients of the Hermite interpolant.

    ``nodes`` lists ``(x_j, k_j)``: value and derivatives up to order
    ``k_j - 1`` are matched at ``x_j``.  ``taylor[j]`` holds the scaled
    derivatives ``h^(m)(x_j)/m!``.  Returns ``(points, coeffs)`` where the
    interpolant is ``sum_i coeffs[i] prod_{l<i} (x - points[l])``.
    """
    pts, src = [], []
    for j, (x, k) in enumerate(nodes):
        for r in range(k):
            pts.append(complex(x))
            src.append((j, r))
    n = len(pts)
    table = np.zeros((n, n), dtype=complex)
    for i, (j, _) in enumerate(src):
        table[i, 0] = taylor[j][0]
    for lev in range(1, n):
        for i in range(n - lev):
            a, b = pts[i], pts[i + lev]
            if a == b:
                table[i, lev] = taylor[src[i][0]][lev]
            else:
                table[i, lev] = (table[i + 1, lev - 1] - table[i, lev - 1]) / (b - a)
    return np.array(pts), table[0, :].copy()


def newton_apply(b: np.ndarray, points: np.ndarray, coeffs: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``p(B) f`` for a Newton-form polynomial (nested evaluation)."""
    n = b.shape[0]
    acc = coeffs[-1] * f
    for i in range(len(coeffs) - 2, -1, -1):
        acc = (b - points[i] * np.eye(n)) @ acc + coeffs[i] * f
    return acc


def primary_function_hermite(b, blocks: Sequence[Tuple[complex, int]], h: Callable[[complex], complex],
                             f, radius_factor: float = 0.2) -> np.ndarray:
    """``h(B) f`` through the Hermite interpolant on the known spectrum.

    ``blocks`` is the Jordan structure ``(mu, size)``; each distinct eigenvalue
    is matched to the order of its largest block.
    """
    b = np.asarray(b, dtype=complex)
    index = {}
    for mu, k in blocks:
        key = complex(mu)
        index[key] = max(index.get(key, 0), int(k))
    nodes = sorted(index.items(), key=lambda kv: (abs(kv[0]), kv[0].real))
    taylor = []
    for mu, k in nodes:
        others = [abs(mu - m) for m, _ in nodes if m != mu]
        rad = radius_factor * abs(mu)
        if others:
            rad = min(rad, 0.4 * min(others))
        taylor.append(taylor_coefficients(h, mu, k, rad))
    pts, coeffs = hermite_newton(nodes, taylor)
    return newton_apply(b, pts, coeffs, np.asarray(f, dtype=complex))


def primary_function_eig(b, h: Callable[[complex], complex], f) -> np.ndarray:
    """``V h(D) V^-1 f`` from ``numpy.linalg.eig`` (diagonalizable ``B`` only)."""
    d, v = np.linalg.eig(np.asarray(b, dtype=complex))
    vals = np.array([h(complex(x)) for x in d])
    return v @ (vals * np.linalg.solve(v, np.asarray(f, dtype=complex)))


def primary_function_structure(blocks: Sequence[Tuple[complex, int]], s, h_taylor: Callable,
                               f, eps: float = 1.0) -> np.ndarray:
    """``S h(J_eps) S^-1 f`` with ``h(J)`` assembled block by block.

    ``h_taylor(mu, k)`` must return ``h^(m)(mu)/m!`` for ``m < k``; a block with
    superdiagonal ``eps`` contributes ``eps^m h^(m)(mu)/m!`` on its m-th
    superdiagonal.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[0]
    hj = np.zeros((n, n), dtype=complex)
    pos = 0
    for mu, k in blocks:
        tc = h_taylor(complex(mu), int(k))
        for m in range(k):
            idx = np.arange(k - m)
            hj[pos + idx, pos + idx + m] = tc[m] * eps ** m
        pos += k
    return s @ (hj @ np.linalg.solve(s, np.asarray(f, dtype=complex)))


def power_semigroup(b, alpha: float, t: float, f) -> np.ndarray:
    """``exp(-t W^alpha) f`` with ``W = B^-1`` via scipy (principal branch)."""
    w = np.linalg.inv(np.asarray(b, dtype=complex))
    wa = w if alpha == 1 else sla.fractional_matrix_power(w, alpha)
    return sla.expm(-t * wa) @ np.asarray(f, dtype=complex)


def identity_hm(z: complex, t: float) -> Tuple[complex, complex, complex]:
    """Closed forms ``H_0, H_1, H_2`` for ``phi(lambda) = lambda``."""
    return 1.0 + 0j, t * z ** 2, (t * t * z ** 4 - 2 * t * z ** 3) / 2


def hm_finite_difference(phi_scalar: Callable, z: complex, t: float, m: int, step: float = None) -> complex:
    """``H_m`` from Cauchy-circle differences of ``zeta -> exp(-t phi(1/zeta))``."""
    zeta0 = 1.0 / z
    base = phi_scalar(z)
    rad = step if step is not None else 0.1 * abs(zeta0)

    def g(zeta):
        return np.exp(-t * (phi_scalar(1.0 / zeta) - base))

    return complex(taylor_coefficients(g, zeta0, m, rad, nodes=128)[m])


def grunwald_recurrence(beta: float, c: float, k_max: int) -> np.ndarray:
    """``M_k = (-1)^k C(beta, k) c^beta`` via ``C(b, k) = C(b, k-1) (b-k+1)/k``."""
    out = np.empty(k_max + 1)
    out[0] = c ** beta
    for k in range(1, k_max + 1):
        out[k] = -out[k - 1] * (beta - k + 1) / k
    return out


def richardson(values: Sequence[complex], ratio: float = 2.0, order: int = 1) -> complex:
    """Richardson table for values at ``h, h/ratio, h/ratio^2, ...``."""
    table = [np.asarray(v, dtype=complex) for v in values]
    p = order
    while len(table) > 1:
        fac = ratio ** p
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
        p += 1
    return table[0]


def log_spaced_integral_check(n_func, r: float, upper: float) -> float:
    """Plain quadrature of ``int_r^upper n(t)/t^2 dt`` on a fine log grid (test oracle)."""
    x = np.geomspace(r, upper, 200001)
    y = np.array([n_func(v) for v in x]) / x ** 2
    return float(np.trapezoid(y, x)) if hasattr(np, "trapezoid") else float(np.trapz(y, x))


def gamma_ratio_bound(beta: float) -> float:
    """Limit constant ``1/Gamma(1-beta)`` of the binomial partial sums."""
    return 1.0 / math.gamma(1.0 - beta)
