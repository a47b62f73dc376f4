import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from fockstop.errors import ConfigurationError, InvariantError, ShapeError
from fockstop.fock import (
    adapted_gradient,
    ampliate_past,
    cell_op,
    compress_past,
    e_projection,
    exp_inner,
    exp_vector,
    gradient,
    is_identity_adapted,
    is_vacuum_adapted,
    join_projections,
    lower,
    make_grid,
    meet_projections,
    operator_norm,
    pi_id,
    pi_vac,
    random_adapted_projection,
    random_identity_adapted,
    random_operator,
    vacuum,
    vacuum_state,
)

seeds = st.integers(0, 2**32 - 1)
small_n = st.integers(1, 5)


# --- grid and vectors --------------------------------------------------------


@pytest.mark.parametrize("n, dt, dim", [(1, 1.0, 2), (4, 0.25, 16)])
def test_grid_sizes(n, dt, dim):
    g = make_grid(n, 1.0)
    assert g.dt == dt and g.dim == dim


@pytest.mark.parametrize("n, t_max", [(17, 1.0), (0, 1.0), (3, 0.0), (3, -1.0)])
def test_grid_rejects_bad_sizes(n, t_max):
    with pytest.raises(ConfigurationError):
        make_grid(n, t_max)


def test_zero_function_gives_vacuum():
    g = make_grid(3)
    assert np.array_equal(exp_vector(g, np.zeros(3)), vacuum(g))


def test_two_cell_exponential_vector():
    g = make_grid(2, 1.0)
    r = math.sqrt(0.5)
    assert np.allclose(exp_vector(g, [1, 1]), [1, r, r, 0.5], atol=1e-15)


def test_exponential_vector_length_mismatch():
    with pytest.raises(ShapeError):
        exp_vector(make_grid(3), [1, 2])


def test_vacuum_vectors():
    assert np.array_equal(vacuum(make_grid(1)), [1, 0])
    assert np.array_equal(vacuum(make_grid(2)), [1, 0, 0, 0])
    assert abs(np.vdot(vacuum(make_grid(4)), vacuum(make_grid(4))) - 1) == 0


@given(seeds, small_n)
def test_exponential_vector_matches_kron_oracle(seed, n):
    rng = np.random.default_rng(seed)
    g = make_grid(n, float(rng.uniform(0.2, 3)))
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.allclose(exp_vector(g, f), oracles.exp_vec(n, f, g.dt), atol=1e-14)


@given(seeds, small_n)
def test_exponential_inner_product_is_a_product(seed, n):
    rng = np.random.default_rng(seed)
    g = make_grid(n)
    f, h = (rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(2))
    direct = np.vdot(exp_vector(g, f), exp_vector(g, h))
    assert abs(direct - exp_inner(g, f, h)) <= 1e-12 * max(1.0, abs(direct))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_coherent_vectors_are_total(n):
    rng = np.random.default_rng(n)
    g = make_grid(n)
    vecs = np.array([exp_vector(g, rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(g.dim)])
    assert abs(np.linalg.det(vecs.conj() @ vecs.T)) > 1e-12


# --- cell operators ----------------------------------------------------------


def test_single_cell_annihilator():
    assert np.array_equal(cell_op(make_grid(1), 0, "annihilate"), [[0, 1], [0, 0]])


@pytest.mark.parametrize("k", [0, 1, 2])
def test_cell_operators_match_kron_oracle(k):
    g = make_grid(3)
    a = cell_op(g, k, "annihilate")
    assert np.array_equal(a, oracles.annihilator(3, k))
    assert np.array_equal(cell_op(g, k, "create"), a.conj().T)
    assert np.array_equal(cell_op(g, k, "number"), a.conj().T @ a)
    assert np.array_equal(a.conj().T @ a + a @ a.conj().T, np.eye(8))


def test_cell_index_out_of_range():
    with pytest.raises(ShapeError):
        cell_op(make_grid(2), 2, "number")


def test_annihilator_on_exponential_vector():
    g = make_grid(3)
    f = np.array([0.3, -1.2 + 0.5j, 2.0])
    for k in range(3):
        zeroed = f.copy()
        zeroed[k] = 0
        expected = f[k] * math.sqrt(g.dt) * exp_vector(g, zeroed)
        assert np.allclose(cell_op(g, k, "annihilate") @ exp_vector(g, f), expected, atol=1e-15)


@given(seeds, st.integers(1, 4))
def test_lower_matches_dense_product(seed, n):
    rng = np.random.default_rng(seed)
    X = random_operator(1 << n, rng)
    for k in range(n):
        a = oracles.annihilator(n, k)
        assert np.allclose(lower(X, k), a.conj().T @ X @ a, atol=1e-15)


# --- E_j and compressions ----------------------------------------------------


def test_e_projection_ends():
    g = make_grid(3)
    E0 = e_projection(g, 0)
    assert np.linalg.matrix_rank(E0) == 1 and E0[0, 0] == 1
    assert np.array_equal(e_projection(g, 3), np.eye(8))


def test_e_projection_index_out_of_range():
    with pytest.raises(ShapeError):
        e_projection(make_grid(3), 4)


def test_e1_on_two_cell_exponential_vector():
    # bit 0 is cell 0, so the surviving past amplitude sits at index 1
    g = make_grid(2, 1.0)
    out = e_projection(g, 1) @ exp_vector(g, [1, 1])
    assert np.allclose(out, [1, math.sqrt(0.5), 0, 0], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_e_projection_matches_kron_oracle(n):
    g = make_grid(n)
    for j in range(n + 1):
        assert np.array_equal(e_projection(g, j), oracles.e_proj(n, j))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_e_products_and_telescope(n):
    g = make_grid(n)
    E = [e_projection(g, j) for j in range(n + 1)]
    for i in range(n + 1):
        for j in range(n + 1):
            assert np.array_equal(E[i] @ E[j], E[min(i, j)])
    for j in range(n):
        assert np.array_equal(E[j + 1] - E[j], lower(E[j], j))


def test_vacuum_state_examples():
    g = make_grid(3)
    assert vacuum_state(np.eye(8)) == 1
    assert all(vacuum_state(e_projection(g, j)) == 1 for j in range(4))
    assert vacuum_state(cell_op(g, 1, "number")) == 0


def test_compress_and_ampliate_examples(rng):
    g = make_grid(3)
    for j in range(4):
        assert np.array_equal(compress_past(np.eye(8), j), np.eye(1 << j))
        assert np.array_equal(compress_past(e_projection(g, j), j), np.eye(1 << j))
        X = random_operator(1 << j, rng)
        assert np.array_equal(compress_past(ampliate_past(g, X, j), j), X)
    with pytest.raises(ShapeError):
        ampliate_past(g, np.eye(2), 2)


def test_pi_examples(rng):
    g = make_grid(3)
    Z = random_operator(8, rng)
    assert np.array_equal(pi_vac(Z, 3), Z) and np.array_equal(pi_id(Z, 3), Z)
    for j in range(4):
        assert np.array_equal(pi_id(e_projection(g, j), j), np.eye(8))
    assert np.allclose(pi_vac(Z, 0), Z[0, 0] * e_projection(g, 0))
    assert np.allclose(pi_id(Z, 0), Z[0, 0] * np.eye(8))


@given(seeds, st.integers(1, 4))
def test_pi_id_matches_kron_oracle(seed, n):
    rng = np.random.default_rng(seed)
    Z = random_operator(1 << n, rng)
    for j in range(n + 1):
        assert np.allclose(pi_id(Z, j), oracles.pi_id(Z, n, j), atol=1e-15)
        E = oracles.e_proj(n, j)
        assert np.allclose(pi_vac(Z, j), E @ Z @ E, atol=1e-15)


@given(seeds, st.integers(1, 4))
def test_pi_id_commutes_with_future_cells(seed, n):
    rng = np.random.default_rng(seed)
    g = make_grid(n)
    Z = random_operator(g.dim, rng)
    for j in range(n + 1):
        P = pi_id(Z, j)
        for k in range(j, n):
            for kind in ("annihilate", "create", "number"):
                c = cell_op(g, k, kind)
                assert np.allclose(P @ c, c @ P, atol=1e-14)


@given(seeds, st.integers(1, 4))
def test_pi_vac_is_multiplicative(seed, n):
    rng = np.random.default_rng(seed)
    Z, W = random_operator(1 << n, rng), random_operator(1 << n, rng)
    for j in range(n + 1):
        assert np.allclose(pi_vac(Z @ pi_vac(W, j), j), pi_vac(Z, j) @ pi_vac(W, j), atol=1e-14)


@given(seeds, st.integers(1, 4))
def test_pi_id_multiplicative_against_adapted_factor(seed, n):
    rng = np.random.default_rng(seed)
    g = make_grid(n)
    Z = random_operator(g.dim, rng)
    for j in range(n + 1):
        A = random_identity_adapted(g, j, rng)
        assert np.allclose(pi_id(Z @ A, j), pi_id(Z, j) @ A, atol=1e-14)
        assert np.allclose(pi_id(A @ Z, j), A @ pi_id(Z, j), atol=1e-14)


def test_pi_id_is_not_multiplicative_in_general():
    g = make_grid(1)
    a = cell_op(g, 0, "annihilate")
    assert np.array_equal(pi_id(a.conj().T @ a, 0), np.zeros((2, 2)))
    assert not np.array_equal(pi_id(a @ a.conj().T, 0), pi_id(a, 0) @ pi_id(a.conj().T, 0))


def test_adaptedness_examples():
    g = make_grid(3)
    for j in range(4):
        assert is_vacuum_adapted(e_projection(g, j), j)
        for k in range(3):
            n_k = cell_op(g, k, "number")
            assert is_identity_adapted(n_k, j) == (k < j)


def test_gradients_on_exponential_vectors():
    g = make_grid(3)
    f = np.array([0.5, 1 - 1j, 2.0])
    x = exp_vector(g, f)
    root = math.sqrt(g.dt)
    for k in range(3):
        assert not np.any(adapted_gradient(vacuum(g), k))
        past = np.where(np.arange(3) < k, f, 0)
        assert np.allclose(adapted_gradient(x, k), f[k] * root * exp_vector(g, past), atol=1e-15)
        vacced = f.copy()
        vacced[k] = 0
        assert np.allclose(gradient(x, k), f[k] * root * exp_vector(g, vacced), atol=1e-15)
    assert np.allclose(adapted_gradient(x, 0), f[0] * root * vacuum(g))


@given(seeds, st.integers(1, 5))
def test_adapted_gradient_pythagoras(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    total = abs(x[0]) ** 2 + sum(np.linalg.norm(adapted_gradient(x, k)) ** 2 for k in range(n))
    assert abs(total - np.linalg.norm(x) ** 2) <= 1e-12 * np.linalg.norm(x) ** 2


# --- lattice -----------------------------------------------------------------


def test_meet_examples(rng):
    g = make_grid(3)
    P = random_adapted_projection(g, 2, rng)
    assert np.allclose(meet_projections(P, P), P, atol=1e-10)
    assert np.allclose(meet_projections(P, np.eye(8)), P, atol=1e-10)
    for i in range(4):
        for j in range(4):
            assert np.allclose(meet_projections(e_projection(g, i), e_projection(g, j)),
                               e_projection(g, min(i, j)), atol=1e-12)


def test_meet_rejects_non_projections():
    with pytest.raises(InvariantError):
        meet_projections(2 * np.eye(4), np.eye(4))


@given(seeds, st.integers(1, 4))
def test_commuting_lattice_laws(seed, n):
    rng = np.random.default_rng(seed)
    dim = 1 << n
    U, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    p, q = rng.integers(0, 2, dim), rng.integers(0, 2, dim)
    P, Q = U @ np.diag(p) @ U.T, U @ np.diag(q) @ U.T
    assert np.allclose(meet_projections(P, Q), P @ Q, atol=1e-10)
    assert np.allclose(join_projections(P, Q), P + Q - P @ Q, atol=1e-10)


def test_operator_norm_examples(rng):
    g = make_grid(3)
    assert abs(operator_norm(e_projection(g, 1)) - 1) < 1e-12
    assert operator_norm(np.zeros((8, 8))) == 0
    Z = random_operator(8, rng)
    assert abs(operator_norm(Z) - np.linalg.svd(Z, compute_uv=False)[0]) < 1e-12


def test_random_adapted_projection_is_adapted_and_seeded():
    g = make_grid(4)
    for j in range(5):
        P = random_adapted_projection(g, j, np.random.default_rng(j))
        assert is_identity_adapted(P, j)
        assert np.allclose(P @ P, P, atol=1e-12)
        assert np.array_equal(P, random_adapted_projection(g, j, np.random.default_rng(j)))
