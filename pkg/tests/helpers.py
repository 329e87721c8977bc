"""Random operator generators shared by the tests."""

import math

import numpy as np

from lidskii_lab.operators import SectorFactorization


def random_hermitian(n, rng):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x + x.conj().T) / 2


def random_pd(n, rng, floor=0.1):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x @ x.conj().T / n + floor * np.eye(n)


def random_sectorial(n, theta, rng, fill=0.95):
    """``H^{1/2}(I + iG)H^{1/2}`` with ``||G|| = fill * tan(theta)``: numerical range in the sector."""
    h = random_pd(n, rng)
    g = random_hermitian(n, rng)
    g *= fill * math.tan(theta) / np.linalg.norm(g, 2)
    return SectorFactorization(h, g).assemble()


def random_vector(n, rng):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)
