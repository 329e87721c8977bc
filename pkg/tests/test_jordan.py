import numpy as np
import pytest
from hypothesis import given, strategies as st

from lidskii_lab.jordan import (
    JordanError, RootSystem, biorthogonal_system, coefficients_c0, jordan_decompose, jordan_matrix,
    root_system_from_structure,
)

S_FIXED = np.array([[2.0, 1.0, 0.0], [0.5, 1.0, 1.0], [0.0, 1.0, 3.0]])


def _model(blocks, s):
    return s @ jordan_matrix(blocks) @ np.linalg.inv(s)


def test_recovers_block_structure():
    b = _model([(2, 2), (5, 1)], S_FIXED)
    rs = jordan_decompose(b)
    lengths = {round(c.eigenvalue.real, 8): c.length for c in rs.chains}
    assert lengths == {2.0: 2, 5.0: 1}
    assert max(rs.residuals(b)) < 1e-12
    assert rs.algebraic_multiplicity()[rs.chains[0].eigenvalue] == 1


def test_chains_satisfy_jordan_relation():
    b = _model([(2, 2), (5, 1)], S_FIXED)
    for c in jordan_decompose(b).chains:
        for j in range(1, c.length):
            lhs = (b - c.eigenvalue * np.eye(3)) @ c.vectors[:, j]
            assert np.allclose(lhs, c.vectors[:, j - 1], atol=1e-10)


def test_simple_spectrum_fast_path():
    rs = jordan_decompose(np.diag([3.0, 1.0, 2.0]))
    assert [c.length for c in rs.chains] == [1, 1, 1]
    assert [c.eigenvalue.real for c in rs.chains] == [3.0, 2.0, 1.0]


def test_biorthogonal_two_by_two_block():
    b = np.array([[2.0, 1.0], [0.0, 2.0]])
    rs = jordan_decompose(b)
    bs = biorthogonal_system(rs, b)
    e, g = rs.matrix(), bs.g
    assert abs(np.vdot(g[:, 1], e[:, 0])) > 0.5  # (e_1, g_2)
    assert abs(np.vdot(g[:, 0], e[:, 1])) > 0.5  # (e_2, g_1)
    # the dual chain is a Jordan chain of b^* for the conjugate eigenvalue
    bh = b.conj().T
    assert np.allclose((bh - 2 * np.eye(2)) @ g[:, 0], 0, atol=1e-12)
    assert np.allclose((bh - 2 * np.eye(2)) @ g[:, 1], g[:, 0], atol=1e-12)


def test_cross_block_pairings_vanish():
    b = _model([(2, 2), (5, 1)], np.eye(3))
    bs = biorthogonal_system(jordan_decompose(b), b)
    assert bs.cross_group_max <= 1e-12


def test_coefficients_reconstruct_vector():
    rng = np.random.default_rng(4)
    b = _model([(1.5, 3)], S_FIXED)
    rs = jordan_decompose(b)
    f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    c = coefficients_c0(f, rs, biorthogonal_system(rs, b))
    assert np.allclose(rs.matrix() @ c, f, atol=1e-10)


def test_json_round_trip():
    rs = jordan_decompose(_model([(2, 2), (5, 1)], S_FIXED))
    back = RootSystem.from_json(rs.to_json())
    assert back.dim == rs.dim and len(back.chains) == len(rs.chains)
    assert np.array_equal(back.matrix(), rs.matrix())
    assert back.to_json() == rs.to_json()


def test_dependent_root_vectors_rejected():
    rs = root_system_from_structure([(1.0, 1), (2.0, 1)], np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(JordanError):
        biorthogonal_system(rs)


blocks_strategy = st.lists(st.tuples(st.sampled_from([0.5, 1.0, 2.0, 3.0, -1.5]), st.integers(1, 3)),
                           min_size=1, max_size=3, unique_by=lambda x: x[0])


@given(blocks_strategy, st.integers(0, 10 ** 6))
def test_random_block_structures_recovered(blocks, seed):
    rng = np.random.default_rng(seed)
    n = sum(k for _, k in blocks)
    s = np.eye(n) + 0.2 * rng.standard_normal((n, n))
    b = _model(blocks, s)
    rs = jordan_decompose(b)
    got = sorted((round(c.eigenvalue.real, 6), c.length) for c in rs.chains)
    assert got == sorted((float(m), k) for m, k in blocks)
    assert max(rs.residuals(b)) < 1e-8
    assert rs.nu_total == n
