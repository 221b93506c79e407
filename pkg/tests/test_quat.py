import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qcgeom.errors import DimensionMismatch, NotJInvariant
from qcgeom.quat import (
    AffineMap,
    I,
    J,
    J_matrix,
    K,
    ONE,
    QHermitian,
    Quaternion,
    apply_J,
    congruence_diagonalize,
    flat_inner,
    from_real_form,
    j_commutator_residual,
    qmat_adjoint,
    qmat_inverse,
    qmat_mul,
    qmat_vec,
    qmul,
    random_affine_map,
    real_form,
    sym_eigen,
    to_quat_hermitian,
    unit_vector,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quat4 = arrays(np.float64, 4, elements=finite)


def as_complex(q):
    """Independent oracle: t + xi + yj + zk as a 2x2 complex matrix."""
    t, x, y, z = q
    a, b = complex(t, x), complex(y, z)
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def random_qmat(rng, n):
    return rng.uniform(-2, 2, size=(n, n, 4))


def random_hermitian_from(rng, diag):
    """A* D A for a random invertible quaternionic A."""
    n = len(diag)
    A = random_qmat(rng, n)
    D = np.zeros((n, n, 4))
    D[np.arange(n), np.arange(n), 0] = diag
    return qmat_mul(qmat_mul(qmat_adjoint(A), D), A)


# --- quaternions -------------------------------------------------------------


def test_hamilton_relations():
    assert I * I == -ONE
    assert J * J == -ONE
    assert K * K == -ONE
    assert I * J == K
    assert J * K == I
    assert K * I == J
    assert J * I == -K


@given(quat4, quat4)
def test_product_matches_complex_matrix_representation(a, b):
    got = qmul(a, b).as_array()
    want = as_complex(a) @ as_complex(b)
    np.testing.assert_allclose(as_complex(got), want, atol=1e-9)


@given(quat4)
def test_inverse_and_norm(a):
    q = Quaternion.from_array(a)
    if q.norm() < 1e-3:
        return
    np.testing.assert_allclose((q * q.inverse()).as_array(), [1, 0, 0, 0], atol=1e-12)
    assert q.norm() ** 2 == pytest.approx(np.linalg.det(as_complex(a)).real, rel=1e-9)


# --- complex structures ---------------------------------------------------------


@pytest.mark.parametrize("dim", [8, 12])
def test_J_quaternion_relations(dim):
    J1, J2, J3 = (J_matrix(s, dim) for s in (1, 2, 3))
    Id = np.eye(dim)
    for Js in (J1, J2, J3):
        np.testing.assert_array_equal(Js @ Js, -Id)
        np.testing.assert_array_equal(Js.T @ Js, Id)
    np.testing.assert_array_equal(J1 @ J2, J3)
    np.testing.assert_array_equal(J2 @ J3, J1)
    np.testing.assert_array_equal(J3 @ J1, J2)


def test_J1_slot_action():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    # right multiplication by -i: (t, x, y, z) -> (x, -t, -z, y)
    np.testing.assert_array_equal(apply_J(1, v), [2.0, -1.0, -4.0, 3.0])


def test_J_commutes_with_left_matrices():
    rng = np.random.default_rng(0)
    R = real_form(random_qmat(rng, 3))
    for s in (1, 2, 3):
        Js = J_matrix(s, 12)
        np.testing.assert_allclose(R @ Js, Js @ R, atol=1e-12)


def test_J_matrix_is_read_only():
    with pytest.raises(ValueError):
        J_matrix(1, 8)[0, 0] = 1.0


def test_bad_J_index():
    with pytest.raises(ValueError):
        apply_J(4, np.zeros(8))


def test_flat_inner_dimension_check():
    assert flat_inner(unit_vector(8, 1, 2), unit_vector(8, 1, 2)) == 1.0
    with pytest.raises(DimensionMismatch):
        flat_inner(np.zeros(8), np.zeros(12))


# --- quaternionic matrices ----------------------------------------------------


def test_real_form_is_a_homomorphism():
    rng = np.random.default_rng(1)
    A, B = random_qmat(rng, 3), random_qmat(rng, 3)
    np.testing.assert_allclose(real_form(qmat_mul(A, B)), real_form(A) @ real_form(B), atol=1e-12)
    np.testing.assert_allclose(real_form(qmat_adjoint(A)), real_form(A).T, atol=1e-12)
    np.testing.assert_allclose(from_real_form(real_form(A)), A, atol=1e-15)
    v = rng.normal(size=12)
    np.testing.assert_allclose(qmat_vec(A, v), real_form(A) @ v, atol=1e-12)


def test_qmat_inverse():
    rng = np.random.default_rng(2)
    A = random_qmat(rng, 2)
    np.testing.assert_allclose(real_form(qmat_mul(A, qmat_inverse(A))), np.eye(8), atol=1e-10)


def test_affine_map_compose_and_inverse():
    rng = np.random.default_rng(3)
    F, G = random_affine_map(rng, 2), random_affine_map(rng, 2)
    x = rng.normal(size=(5, 8))
    np.testing.assert_allclose(F.compose(G)(x), F(G(x)), atol=1e-10)
    np.testing.assert_allclose(F.inverse()(F(x)), x, atol=1e-10)


def test_affine_map_formula():
    rng = np.random.default_rng(4)
    F = random_affine_map(rng, 2)
    x = rng.normal(size=8)
    Ax = qmat_vec(F.A, x).reshape(2, 4)
    want = np.concatenate([qmul(Ax[a], F.omega.conj()).as_array() for a in range(2)]) + F.q0
    np.testing.assert_allclose(F(x), want, atol=1e-12)


def test_random_affine_map_ranges():
    rng = np.random.default_rng(5)
    for _ in range(20):
        F = random_affine_map(rng, 2)
        assert np.abs(F.A).max() <= 2.0
        assert np.linalg.cond(real_form(F.A)) <= 1e3
        assert F.omega.norm() == pytest.approx(1.0)
        assert np.abs(F.q0).max() <= 1.0


def test_affine_map_rejects_singular():
    with pytest.raises(ValueError):
        AffineMap(np.zeros((2, 2, 4)), ONE, np.zeros(8))
    with pytest.raises(DimensionMismatch):
        AffineMap(np.zeros((2, 2, 4)), ONE, np.zeros(4))


# --- symmetric eigensolver ---------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_sym_eigen_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(9, 9))
    M = M + M.T
    w, V = sym_eigen(M)
    np.testing.assert_allclose(w, np.linalg.eigh(M)[0], atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(9), atol=1e-13)
    np.testing.assert_allclose(M @ V, V * w, atol=1e-12)


def test_sym_eigen_resolves_degenerate_kernel_to_rounding():
    # a J-invariant form with a quadruple kernel: the eigenvectors of the zero
    # cluster must annihilate the matrix to rounding level, not to sqrt(eps)
    rng = np.random.default_rng(11)
    H = random_hermitian_from(rng, [1.0, 0.0])
    D = real_form(H)
    D = 0.5 * (D + D.T)
    w, V = sym_eigen(D)
    kernel = V[:, np.abs(w) < 1e-8 * np.abs(w).max()]
    assert kernel.shape[1] == 4
    assert np.abs(D @ kernel).max() < 1e-13 * np.abs(D).max()


def test_sym_eigen_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


# --- Hermitian forms and congruence -----------------------------------------------


def test_to_quat_hermitian_round_trip():
    rng = np.random.default_rng(6)
    H = random_hermitian_from(rng, [1.0, -1.0, 2.0])
    D = real_form(H)
    D = 0.5 * (D + D.T)
    assert j_commutator_residual(D) < 1e-14
    np.testing.assert_allclose(QHermitian(to_quat_hermitian(D).entries).real_symmetric(), D, atol=1e-12)


def test_to_quat_hermitian_rejects_non_invariant():
    D = np.diag([1.0, 2.0, 3.0, 4.0, 1.0, 1.0, 1.0, 1.0])
    with pytest.raises(NotJInvariant):
        to_quat_hermitian(D)


@pytest.mark.parametrize("diag, inertia", [
    ([1.0, 1.0, 1.0], (3, 0, 0)),
    ([1.0, -1.0, 2.0], (2, 1, 0)),
    ([3.0, 0.0, 1.0], (2, 0, 1)),
    ([-1.0, -2.0, 0.0], (0, 2, 1)),
])
def test_congruence_diagonalize(diag, inertia):
    rng = np.random.default_rng(7)
    H = random_hermitian_from(rng, diag)
    A, got = congruence_diagonalize(H)
    assert got == inertia
    p, m, z = inertia
    want = np.zeros((3, 3, 4))
    want[np.arange(3), np.arange(3), 0] = [1.0] * p + [-1.0] * m + [0.0] * z
    np.testing.assert_allclose(qmat_mul(qmat_mul(qmat_adjoint(A), H), A), want, atol=1e-10)
    # oracle: eigenvalue signs of the real form, counted in fours
    ev = np.linalg.eigvalsh(real_form(H))
    scale = np.abs(ev).max()
    counts = (np.sum(ev > 1e-8 * scale), np.sum(ev < -1e-8 * scale), np.sum(np.abs(ev) <= 1e-8 * scale))
    assert tuple(int(c) // 4 for c in counts) == inertia


def test_congruence_hyperbolic_block_without_diagonal():
    # zero diagonal, off-diagonal unit quaternion: signature (1, 1, 0)
    H = np.zeros((2, 2, 4))
    H[0, 1] = [0.0, 0.6, 0.0, 0.8]
    H[1, 0] = [0.0, -0.6, 0.0, -0.8]
    A, inertia = congruence_diagonalize(H)
    assert inertia == (1, 1, 0)
    out = qmat_mul(qmat_mul(qmat_adjoint(A), H), A)
    np.testing.assert_allclose(out[:, :, 0], np.diag([1.0, -1.0]), atol=1e-12)


def test_congruence_leaves_diagonal_forms_in_place():
    H = np.zeros((2, 2, 4))
    H[0, 0, 0] = H[1, 1, 0] = 4.0
    A, _ = congruence_diagonalize(H)
    np.testing.assert_allclose(A[:, :, 0], 0.5 * np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_inertia_invariant_under_congruence(seed):
    rng = np.random.default_rng(seed)
    diag = rng.choice([-1.0, 0.0, 1.0, 2.0], size=3)
    if not np.any(diag):
        diag[0] = 1.0
    H = random_hermitian_from(rng, diag)
    B = random_qmat(rng, 3)
    if np.linalg.cond(real_form(B)) > 1e3:
        return
    H2 = qmat_mul(qmat_mul(qmat_adjoint(B), H), B)
    assert congruence_diagonalize(H)[1] == congruence_diagonalize(H2)[1]
