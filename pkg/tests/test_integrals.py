import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from fockstop.errors import ContractError
from fockstop.fock import cell_op, e_projection, exp_vector, make_grid, pi_id
from fockstop.integrals import (
    Kind,
    Process,
    QSIntegrands,
    annihilation_integral,
    conjugate_tail_integral,
    creation_integral,
    decompose_increment,
    gauge_integral,
    gauge_norm_estimate,
    increment,
    is_martingale,
    ito_product,
    semimartingale_eval,
    semimartingale_process,
    semimartingale_values,
    switch_representation,
    time_integral,
    weak_ito_gauge,
)
from fockstop.lab import samplers as sm

seeds = st.integers(0, 2**32 - 1)


def e_process(g, closing=True):
    return Process.from_function(g, Kind.VACUUM, lambda k: e_projection(g, k), np.eye(g.dim) if closing else None)


def zero_quadruple(g, initial, kind=Kind.VACUUM):
    z = Process.zero(g, kind)
    return QSIntegrands(initial, z, z, z, z)


def gauge_quadruple(g, N, initial):
    z = Process.zero(g, N.kind)
    return QSIntegrands(initial, N, z, z, z)


def test_integrals_match_kron_oracle(rng):
    n = 3
    g = make_grid(n)
    procs = [sm.adapted_process(g, rng, "vacuum") for _ in range(4)]
    a = [oracles.annihilator(n, k) for k in range(n)]
    rt = math.sqrt(g.dt)
    N, P, Q, R = procs
    assert np.allclose(gauge_integral(N), sum(a[k].conj().T @ N[k] @ a[k] for k in range(n)), atol=1e-14)
    assert np.allclose(annihilation_integral(P), rt * sum(P[k] @ a[k] for k in range(n)), atol=1e-14)
    assert np.allclose(creation_integral(Q), rt * sum(a[k].conj().T @ Q[k] for k in range(n)), atol=1e-14)
    assert np.allclose(time_integral(R), g.dt * sum(R[k] for k in range(n)), atol=1e-14)


def test_gauge_integral_of_e_telescopes():
    g = make_grid(4)
    E = e_process(g)
    assert np.array_equal(gauge_integral(E), np.eye(16) - e_projection(g, 0))
    assert not np.any(gauge_integral(Process.zero(g)))
    assert not np.any(annihilation_integral(Process.zero(g)))
    X = gauge_quadruple(g, E, e_projection(g, 0))
    for j in range(5):
        assert np.array_equal(semimartingale_eval(X, j), e_projection(g, j))


def test_general_integrand_rejected():
    g = make_grid(2)
    with pytest.raises(ContractError):
        gauge_integral(Process.constant(g, np.eye(4)))


def test_zero_integrands_give_the_constant():
    g = make_grid(3)
    X = zero_quadruple(g, 0.7 * e_projection(g, 0))
    for j in range(4):
        assert np.array_equal(semimartingale_eval(X, j), 0.7 * e_projection(g, 0))


def test_martingale_examples():
    g = make_grid(4)
    I = np.eye(16)
    assert is_martingale(e_process(g))
    assert is_martingale(Process.constant(g, I, Kind.IDENTITY))
    t = Process.from_function(g, Kind.IDENTITY, lambda k: time_integral(Process.constant(g, I, Kind.IDENTITY), k))
    assert not is_martingale(t)


@given(seeds)
def test_martingale_part_is_a_martingale(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    X = sm.quadruple(g, rng, "vacuum", martingale=True)
    assert is_martingale(semimartingale_process(X))
    R = Process.from_function(g, Kind.VACUUM, lambda k: e_projection(g, k))
    drift = QSIntegrands(X.initial, X.N, X.P, X.Q, R)
    assert not is_martingale(semimartingale_process(drift))


@given(seeds)
def test_vacuum_ito_product_is_exact(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    X, Y = sm.quadruple(g, rng), sm.quadruple(g, rng)
    xs, ys = semimartingale_values(X), semimartingale_values(Y)
    for j, v in enumerate(semimartingale_values(ito_product(X, Y))):
        assert np.linalg.norm(v - xs[j] @ ys[j]) <= g.eps_exact


@given(seeds)
def test_identity_ito_product_is_exact_with_grid_terms(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    X, Y = sm.quadruple(g, rng, "identity"), sm.quadruple(g, rng, "identity")
    xs, ys = semimartingale_values(X), semimartingale_values(Y)
    for j, v in enumerate(semimartingale_values(ito_product(X, Y))):
        assert np.linalg.norm(v - xs[j] @ ys[j]) <= g.eps_exact


def test_vacuum_ito_product_needs_its_grid_terms(rng):
    g = make_grid(3)
    X, Y = sm.quadruple(g, rng), sm.quadruple(g, rng)
    literal = semimartingale_values(ito_product(X, Y, discrete=False))[-1]
    xs, ys = semimartingale_values(X), semimartingale_values(Y)
    assert np.linalg.norm(literal - xs[-1] @ ys[-1]) > 1e-3


def test_ito_product_examples():
    g = make_grid(3)
    E = gauge_quadruple(g, e_process(g, False), e_projection(g, 0))
    one = zero_quadruple(g, e_projection(g, 0))
    EE = ito_product(E, E)
    for k in range(4):
        assert np.array_equal(EE.N[k], e_projection(g, k))
    # (E_j) acts as the unit on vacuum-adapted processes
    X = sm.quadruple(g, np.random.default_rng(3))
    for a, b in zip(semimartingale_values(ito_product(X, E)), semimartingale_values(X)):
        assert np.allclose(a, b, atol=1e-14)
    assert np.array_equal(semimartingale_eval(one, 3), e_projection(g, 0))


def test_repeated_products_with_e(rng):
    g = make_grid(3)
    E = gauge_quadruple(g, e_process(g, False), e_projection(g, 0))
    X = sm.quadruple(g, rng)
    P = X
    for _ in range(3):
        P = ito_product(P, E)
    assert np.allclose(semimartingale_values(P)[-1], semimartingale_values(X)[-1], atol=1e-12)


def test_ito_product_kind_mismatch(rng):
    g = make_grid(2)
    with pytest.raises(ContractError):
        ito_product(sm.quadruple(g, rng), sm.quadruple(g, rng, "identity"))


@given(seeds)
def test_gauge_only_products(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    N, N2 = sm.adapted_process(g, rng, "vacuum"), sm.adapted_process(g, rng, "vacuum")
    NN = Process(g, Kind.VACUUM, tuple(a @ b for a, b in zip(N.ops, N2.ops)))
    assert np.linalg.norm(gauge_integral(N) @ gauge_integral(N2) - gauge_integral(NN)) <= g.eps_exact


@pytest.mark.parametrize("kind", ["identity", "vacuum"])
@given(seed=seeds)
def test_weak_ito_gauge(kind, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    N, N2 = sm.adapted_process(g, rng, kind), sm.adapted_process(g, rng, kind)
    x, x2 = sm.state_vector(g, rng), sm.state_vector(g, rng)
    for j in range(4):
        lhs, rhs = weak_ito_gauge(x, x2, N, N2, j)
        assert abs(lhs - rhs) <= 1e-12


def test_weak_ito_gauge_examples():
    g = make_grid(3)
    x = exp_vector(g, [1, 0.5j, -1])
    z = Process.zero(g)
    assert weak_ito_gauge(x, x, z, z, 3) == (0, 0)
    E = e_process(g, False)
    for j in range(4):
        lhs, rhs = weak_ito_gauge(x, x, E, E, j)
        target = np.linalg.norm((e_projection(g, j) - e_projection(g, 0)) @ x) ** 2
        assert abs(lhs - target) < 1e-14 and abs(rhs - target) < 1e-14


@given(seeds)
def test_conjugate_tail_integral(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    N = sm.adapted_process(g, rng, "identity")
    for j in range(4):
        Z, W = (pi_id(rng.standard_normal((8, 8)) + 0j, j) for _ in range(2))
        rhs = conjugate_tail_integral(Z, W, N, j)
        assert np.linalg.norm(Z @ gauge_integral(N, j_start=j) @ W - rhs) <= g.eps_exact


def test_conjugate_tail_integral_examples(rng):
    g = make_grid(3)
    N = sm.adapted_process(g, rng, "vacuum")
    I = np.eye(8)
    assert np.allclose(conjugate_tail_integral(I, I, N, 1), gauge_integral(N, j_start=1))
    n0 = cell_op(g, 0, "number")
    assert np.allclose(conjugate_tail_integral(n0, n0, N, 1), n0 @ gauge_integral(N, j_start=1) @ n0, atol=1e-14)
    with pytest.raises(ContractError):
        conjugate_tail_integral(cell_op(g, 2, "number"), I, N, 1)


def test_gauge_norm_estimate_examples():
    g = make_grid(4)
    assert gauge_norm_estimate(Process.zero(g), np.ones(4)) == (0, 0)
    lhs, bound = gauge_norm_estimate(e_process(g, False), np.ones(4))
    assert lhs <= bound + 1e-12
    N = Process.constant(g, np.eye(16), Kind.IDENTITY)
    lhs, bound = gauge_norm_estimate(N, np.zeros(4))
    assert lhs == 0 and bound == 0


@pytest.mark.parametrize("kind", ["vacuum", "identity"])
@given(seed=seeds)
def test_gauge_norm_estimate_bound(kind, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    N = sm.adapted_process(g, rng, kind)
    f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lhs, bound = gauge_norm_estimate(N, f)
    assert lhs <= bound + 1e-10


@given(seeds)
def test_switch_representation_is_exact(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    X = sm.quadruple(g, rng)
    Y = switch_representation(X)
    assert Y.kind is Kind.IDENTITY
    for j, (x, y) in enumerate(zip(semimartingale_values(X), semimartingale_values(Y))):
        assert np.linalg.norm(y - pi_id(x, j)) <= g.eps_exact


def test_switch_representation_examples():
    g = make_grid(3)
    zero = zero_quadruple(g, np.zeros((8, 8)))
    assert not any(np.any(v) for v in semimartingale_values(switch_representation(zero)))
    E = gauge_quadruple(g, e_process(g, False), e_projection(g, 0))
    for v in semimartingale_values(switch_representation(E)):
        assert np.allclose(v, np.eye(8))
    with pytest.raises(ContractError):
        switch_representation(sm.quadruple(g, np.random.default_rng(0), "identity"))


@given(seeds)
def test_integrators_are_independent(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(3)
    X = sm.quadruple(g, rng)
    for k in range(3):
        parts = decompose_increment(g, increment(X, k), k)
        for got, want in zip(parts, (X.N[k], X.P[k], X.Q[k], X.R[k])):
            assert np.linalg.norm(got - want) <= g.eps_exact
