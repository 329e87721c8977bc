import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from lidskii_lab.schatten import (
    SequenceError, SingularSequence, convergence_exponent, counting_function, counting_function_scan,
    eigen_decay_probe, subtle_divergence, subtle_eigenvalues, subtle_sequence, geometric,
    growth_envelope, n_log_n, power_counting_bound, power_law, schatten_norm, subtle_condition_check,
)


def test_explicit_sequence_validation():
    with pytest.raises(SequenceError):
        SingularSequence.explicit([1.0, 2.0])
    with pytest.raises(SequenceError):
        SingularSequence.explicit([1.0, 0.0])
    seq = SingularSequence.explicit([1.0, 0.5, 0.5, 0.1])
    assert seq.is_finite and seq.length == 4


def test_counting_function_is_left_continuous_on_ties():
    seq = SingularSequence.explicit([1.0, 0.5, 0.5, 0.25])
    assert counting_function(seq, 2.0) == 1  # 1/s = 2 is not inside |z| < 2
    assert counting_function(seq, 2.0 + 1e-12) == 3
    assert counting_function(seq, 100.0) == 4


def test_counting_subtle_bisection_equals_scan():
    seq = subtle_sequence(1.0, 15.0)
    assert counting_function(seq, 1e3) == counting_function_scan(seq, 1e3, 10 ** 4)


@given(st.floats(0.6, 3.0), st.floats(1.5, 5e3))
def test_counting_power_law_matches_scan(rho, r):
    assume(r ** rho < 9e5)  # the scan oracle stops at 10^6 terms
    seq = power_law(rho)
    assert counting_function(seq, r) == counting_function_scan(seq, r, 10 ** 6)


def test_schatten_zeta_two():
    res = schatten_norm(power_law(0.5), 1.0, n_max=10 ** 6)
    assert res.partial == pytest.approx(math.pi ** 2 / 6, abs=1e-5)
    assert res.tail_flag == "convergent"


def test_schatten_harmonic_is_divergent_suspect():
    res = schatten_norm(power_law(1.0), 1.0, n_max=10 ** 5)
    assert res.tail_flag == "divergent-suspect"


@pytest.mark.parametrize("rho", [0.5, 1.5, 2.5])
def test_power_law_order_recovered(rho):
    est = convergence_exponent(power_law(rho), (10 ** 3, 10 ** 6))
    assert est.rho_hat == pytest.approx(rho, rel=0.02)


@pytest.mark.parametrize("rho", [0.5, 1.5, 2.5])
def test_n_log_n_order_recovered_and_tagged(rho):
    est = convergence_exponent(n_log_n(rho), (10 ** 3, 10 ** 6))
    assert est.rho_hat == pytest.approx(rho, rel=0.05)
    assert est.class_tag == "S*_rho"


def test_geometric_sequence_is_super_polynomial():
    est = convergence_exponent(geometric(0.5), (10, 900))
    assert est.super_polynomial and est.rho_hat == 0.0


def test_subtle_condition_fails_on_pure_power():
    rep = subtle_condition_check(lambda n: n ** 1.0, 1.0, np.geomspace(10, 1e6, 60).astype(int))
    assert not rep.verdict
    assert rep.ratios[-1] > rep.ratios[0]


def test_subtle_condition_passes_on_exponential():
    rep = subtle_condition_check(lambda n: np.exp(np.asarray(n, dtype=float)), 1.0, range(2, 600))
    assert rep.verdict


def test_subtle_first_eigenvalue():
    lam1 = subtle_eigenvalues(np.array([1]), 1.0, 15.0)[0]
    assert lam1 == pytest.approx(math.log(16) * math.log(math.log(16)), rel=1e-14)
    assert lam1 == pytest.approx(2.8274, abs=1e-4)


def test_subtle_divergence_matches_integral_test():
    rep = subtle_divergence(1.0, 15.0, [10 ** 3, 10 ** 6])
    assert rep.ratio > 1.0
    # the partial sums grow like lnlnln(n+q): a slow but unbounded increase
    assert rep.partial_sums[1] - rep.partial_sums[0] == pytest.approx(rep.integral_increment, rel=0.05)


def test_subtle_divergence_comparison_sequence_plateaus():
    rep = subtle_divergence(1.0, 15.0, [10 ** 3, 10 ** 6],
                              lam=lambda n: n * np.log(n + 15.0) ** 2)
    assert not rep.verdict


def test_subtle_rejects_small_q():
    with pytest.raises(SequenceError):
        subtle_divergence(1.0, 2.0, [10, 100])


def test_growth_envelope_finite_rank_decays():
    seq = SingularSequence.explicit(1.0 / np.arange(1, 21))
    r = np.geomspace(10.0, 1e6, 30)
    env = growth_envelope(seq, 0.5, r)
    # for r beyond the last jump only the logarithmic sum remains
    assert env.beta[-1] < env.beta[0]
    assert np.all(np.diff(env.beta[-10:]) < 0)


def test_growth_envelope_beta_closed_form():
    seq = SingularSequence.explicit([0.5, 0.25])
    env = growth_envelope(seq, 0.5, [3.0])
    # n(t) jumps at 2 and 4 (m = 0): int_0^3 n/t = ln(3/2); 3 int_3^inf n/t^2 = 1 + 3/4
    assert env.beta_of_r(3.0) == pytest.approx(3 ** -0.5 * (math.log(1.5) + 1 + 0.75), rel=1e-14)


def test_growth_envelope_rejects_integer_alpha():
    with pytest.raises(SequenceError):
        growth_envelope(power_law(0.5), 1.0, [2.0])


def test_power_counting_bound_example():
    rep = power_counting_bound(np.diag([1.0, 0.5, 0.25]), 1, 3.0)
    assert (rep.lhs, rep.rhs) == (2, 4) and rep.holds


@given(st.integers(0, 10 ** 6))
def test_power_counting_bound_random(seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    for r in np.geomspace(0.05, 50, 20):
        assert power_counting_bound(b, 2, r).holds


@given(st.integers(0, 10 ** 6))
def test_eigen_decay_weyl_inequalities(seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    rep = eigen_decay_probe(b, 0.5)
    assert rep.weyl_product_ok and rep.weyl_sum_ok
    assert abs(rep.moduli[0]) <= rep.singular[0] * (1 + 1e-10)


def test_eigen_decay_normal_has_no_exceedance():
    rep = eigen_decay_probe(np.diag([3.0, -2.0, 1.0j]), 1.0)
    assert rep.individual_exceed == []
