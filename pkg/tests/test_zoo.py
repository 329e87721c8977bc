import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from lidskii_lab import functions as F
from lidskii_lab.oracle import grunwald_recurrence
from lidskii_lab.operators import SectorSpec, sector_angle, sector_check, singular_values
from lidskii_lab.schatten import SingularSequence, convergence_exponent, subtle_condition_check
from lidskii_lab.zoo import (
    ZooError, binomial_weights, build, corpus, difference_fractional, elliptic2d, embedding_compactness_check,
    fractional_symbol, jordan_model, phase_constructed, phi_kappa_checks, psi_function,
    real_component_eigen_check, riesz_constant, riesz_kernel, sine_inner, sturm_liouville, subtle_diagonal,
)


def test_sturm_liouville_diagonal_and_basis():
    m = sturm_liouville(6)
    assert np.allclose(np.diag(m.w), np.arange(1, 7) ** 2)
    assert sine_inner(2, 3) == pytest.approx(0.0, abs=1e-12)
    assert sine_inner(3, 3) == pytest.approx(math.pi / 2, rel=1e-12)


def test_sturm_liouville_order_two():
    s = 1.0 / np.arange(1, 20001, dtype=float) ** 2
    est = convergence_exponent(SingularSequence.explicit(s), (100, 20000))
    assert est.mu_hat == pytest.approx(2.0, rel=0.02)


def test_elliptic2d_first_values():
    m = elliptic2d(1, 0, 6)
    assert np.allclose(np.diag(m.w)[:6].real, [2, 5, 5, 8, 10, 10])


def test_elliptic2d_order_one():
    m = elliptic2d(1, 0, 60)
    lam = np.abs(np.diag(m.w))
    n = np.arange(1, lam.size + 1)
    sel = slice(lam.size // 10, lam.size // 2)  # inside the fully resolved disc
    slope = np.polyfit(np.log(n[sel]), np.log(lam[sel]), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_elliptic2d_rejects_nonpositive_leading_coefficient():
    with pytest.raises(ZooError):
        elliptic2d(-1, 0, 3)


@pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
def test_binomial_weights_match_recurrence(beta):
    m = binomial_weights(beta, 1.7, 200)
    ref = grunwald_recurrence(beta, 1.7, 200)
    assert np.allclose(m, ref, rtol=1e-11, atol=0)
    assert m[0] == pytest.approx(1.7 ** beta, rel=1e-12)


def test_binomial_weights_near_one():
    m = binomial_weights(1 - 1e-6, 2.0, 5)
    assert m[0] == pytest.approx(2.0, abs=1e-4)
    assert m[1] == pytest.approx(-2.0, abs=1e-4)
    assert np.abs(m[2:]).max() < 1e-5


def test_fractional_symbol_on_grid():
    fd = difference_fractional(1.0, 0.5, 0.4, 10 ** 4, grid=64, spacing=0.25)
    x = np.arange(64) * 0.25
    omega = 2 * math.pi * 3 / (64 * 0.25)  # a grid-periodic frequency
    v = np.exp(1j * omega * x)
    _, exact = fractional_symbol(fd, omega)
    applied = fd.y_beta @ v
    assert np.linalg.norm(applied - exact * v) <= 1e-3 * abs(exact) * np.linalg.norm(v)
    assert np.allclose(fd.y @ v, 1.0 * (1 - np.exp(-1j * omega * 0.5)) * v)


def test_fractional_rejects_misaligned_shift():
    with pytest.raises(ZooError):
        difference_fractional(1.0, 0.3, 0.5, 10, grid=16, spacing=0.25)


def test_riesz_constant_half():
    assert riesz_constant(0.5) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    with pytest.raises(ZooError):
        riesz_constant(1.0)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_riesz_kernel_cells_against_quadrature(beta):
    rk = riesz_kernel(beta, 6, 1.5)
    h = rk.h
    assert np.allclose(rk.kernel, rk.kernel.T, atol=1e-14)
    for i in range(6):
        for j in range(6):
            a, b, x = j * h, (j + 1) * h, rk.nodes[i]
            # scipy's algebraic weight handles the endpoint singularity |s - x|^(beta - 1)
            if x <= a:
                val = integrate.quad(lambda s: 1.0, a, b, weight="alg", wvar=(beta - 1, 0))[0] if x == a else \
                    integrate.quad(lambda s: (s - x) ** (beta - 1), a, b)[0]
            elif x >= b:
                val = integrate.quad(lambda s: (x - s) ** (beta - 1), a, b)[0]
            else:
                left = integrate.quad(lambda s: 1.0, a, x, weight="alg", wvar=(0, beta - 1))[0]
                right = integrate.quad(lambda s: 1.0, x, b, weight="alg", wvar=(beta - 1, 0))[0]
                val = left + right
            assert rk.kernel[i, j] == pytest.approx(rk.B_beta * val, rel=1e-10)


def test_riesz_split_identity():
    rk = riesz_kernel(0.6, 8)
    assert np.allclose(rk.kernel, rk.B_beta * math.gamma(0.6) * (rk.i_plus + rk.i_minus), atol=1e-12, rtol=0)


def test_subtle_diagonal_first_entry():
    m = subtle_diagonal(1.0, 15.0, 4)
    assert m.w[0, 0].real == pytest.approx(math.log(16) * math.log(math.log(16)), rel=1e-14)


@given(st.floats(3.0, 1e6), st.floats(-1.2, 1.2), st.floats(0.1, 1.0))
def test_psi_split_matches_direct(r, arg, xi):
    z = r * cmath.exp(1j * arg)
    out = psi_function(z, xi)
    direct = F.psi_scalar(z, xi)
    assert abs(out["value"] - direct) <= 1e-12 * abs(direct)
    assert out["abs2"] == pytest.approx(abs(direct) ** 2, rel=1e-12)


def test_psi_arg_limit_along_ray():
    xi, arg = 0.5, 0.4
    ratios = [psi_function(10.0 ** j * cmath.exp(1j * arg), xi)["arg"] / arg for j in (8, 40, 80)]
    # convergence to xi is logarithmically slow: within 1e-2 only far out along the ray
    assert abs(ratios[-1] - xi) < 1e-2
    assert abs(ratios[2] - xi) < abs(ratios[0] - xi)


def test_psi_rejects_small_modulus():
    with pytest.raises(ZooError):
        psi_function(2.0, 0.5)


def test_phi_kappa_window_converges():
    lam = np.arange(1, 40001, dtype=float) ** 2.0
    early = phi_kappa_checks(lam, 0.5, 1.0, 0.0, window=(100, 200))
    late = phi_kappa_checks(lam, 0.5, 1.0, 0.0, window=(20000, 40000))
    assert late.C2 - late.C1 < early.C2 - early.C1
    assert late.positivity_threshold == 2


def test_phi_kappa_sectorial_threshold_and_rejection():
    lam = np.arange(1, 3001, dtype=float) ** 2.0 * cmath.exp(0.5j)
    rep = phi_kappa_checks(lam, 0.5, 1.0, 0.5)
    assert rep.positivity_threshold is not None
    assert rep.cos_margin == pytest.approx(math.cos(0.25))
    with pytest.raises(ZooError):
        phi_kappa_checks(lam, 1.0, 1.0, math.pi / 2)


@given(st.integers(0, 1000))
def test_phase_constructed_singular_values(seed):
    s = 0.3 * (np.arange(1, 9) * np.log(np.arange(2, 10))) ** (-1 / 1.5)
    m = phase_constructed(s, 0.3, seed=seed)
    assert np.allclose(singular_values(m.b), np.sort(s)[::-1], rtol=1e-12)
    assert sector_check(m.b, SectorSpec(0.3))


@pytest.mark.parametrize("theta0,inside", [(0.2, True), (0.4, False)])
def test_phase_constructed_scalar_unitary(theta0, inside):
    s = np.array([1.0, 0.5, 0.25])
    m = phase_constructed(s, 0.3, unitary=cmath.exp(1j * theta0) * np.eye(3))
    assert m.metadata["certified"] == inside
    assert sector_angle(m.b * cmath.exp(-1j * theta0)) == pytest.approx(0.0, abs=1e-8)


def test_embedding_compactness_random():
    rng = np.random.default_rng(0)
    phi = (np.arange(1, 51) ** 1.5) * np.exp(0.2j)
    f = rng.standard_normal((5, 50)) + 1j * rng.standard_normal((5, 50))
    rep = embedding_compactness_check(rng.permutation(phi), f, [1, 5, 20, 50])
    assert rep.holds and np.all(rep.margins >= 0)


def test_real_component_eigen_check_psi():
    lam = (np.arange(3, 13) ** 2.0) * np.exp(1j * np.linspace(-0.3, 0.3, 10))
    rep = real_component_eigen_check(np.diag(lam), F.log_composite(0.5, 1.0))
    assert rep.holds and rep.max_error <= 1e-10 * np.abs(rep.rhs).max()


def test_real_component_rejects_non_normal():
    with pytest.raises(ZooError):
        real_component_eigen_check(np.array([[1.0, 1.0], [0.0, 2.0]]), F.identity())


def test_jordan_model_declared_chains():
    m = jordan_model([(0.25, 3), (0.1, 1)], seed=2)
    assert max(m.root_system.residuals(m.b)) < 1e-12
    assert m.metadata["theta"] < math.pi / 2


def test_corpus_is_desk_scale_and_sectorial():
    for m in corpus(0):
        assert m.dim <= 12
        assert sector_angle(m.b) < math.pi / 2
        if m.blocks is not None:
            assert max(k for _, k in m.blocks) <= 3


def test_build_dispatch():
    assert build("jordan_model", blocks="0.3:2,0.2:1", seed="1").dim == 3
    assert build("diagonal", values="1,2").dim == 2
    with pytest.raises(ZooError):
        build("kolmogorov")
