"""Registry of grid identities that hold to rounding error.

Each check draws one random instance from ``rng`` and returns a list of
residuals: arrays (whose norms are taken by the runner) or non-negative
floats.  An identity passes when every residual of every case is within the
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import bridge, fock, integrals as qi, stopped as sp, stopping as st
from ..fock import (
    Grid,
    annihilate_vec,
    cell_op,
    e_projection,
    exp_vector,
    lower,
    pi_id,
    pi_vac,
    random_identity_adapted,
    random_operator,
)
from ..integrals import Kind, Process, QSIntegrands
from ..stopping import INF
from . import samplers as sm


@dataclass(frozen=True)
class Identity:
    name: str
    module: str
    check: Callable[[Grid, np.random.Generator], list]
    description: str
    fixed_tol: float | None = None  # for checks whose tolerance is part of the statement
    max_cells: int | None = None  # run on a smaller grid when the statement is capped


REGISTRY: dict[str, Identity] = {}


def register(name, module, description, fixed_tol=None, max_cells=None):
    def deco(fn):
        REGISTRY[name] = Identity(name, module, fn, description, fixed_tol, max_cells)
        return fn

    return deco


def _neg_part(H: np.ndarray) -> float:
    """How far the Hermitian part of H is from being positive semidefinite."""
    return max(0.0, -float(np.linalg.eigvalsh((H + H.conj().T) / 2).min()))


def _flag(ok: bool) -> float:
    return 0.0 if ok else 1.0


def _time(grid, rng) -> int:
    return int(rng.integers(0, grid.n_cells + 1))


def _coeffs(grid, rng):
    return rng.standard_normal(grid.n_cells) + 1j * rng.standard_normal(grid.n_cells)


# --- fock-core ---------------------------------------------------------------


@register("e_product", "fock-core", "E_i E_j = E_min(i,j)")
def _e_product(grid, rng):
    i, j = _time(grid, rng), _time(grid, rng)
    return [e_projection(grid, i) @ e_projection(grid, j) - e_projection(grid, min(i, j))]


@register("e_telescope", "fock-core", "E_{j+1} - E_j = a_j^+ E_j a_j")
def _e_telescope(grid, rng):
    j = int(rng.integers(0, grid.n_cells))
    return [e_projection(grid, j + 1) - e_projection(grid, j) - lower(e_projection(grid, j), j)]


@register("pi_multiplicative", "fock-core", "pi(Z W)_j = pi(Z)_j pi(W)_j when W is identity-adapted at j")
def _pi_mult(grid, rng):
    j = _time(grid, rng)
    Z = random_operator(grid.dim, rng)
    W = random_identity_adapted(grid, j, rng)
    return [
        pi_id(Z @ W, j) - pi_id(Z, j) @ pi_id(W, j),
        pi_id(W @ Z, j) - pi_id(W, j) @ pi_id(Z, j),
        pi_vac(Z @ W, j) - pi_vac(Z, j) @ pi_vac(W, j),
    ]


@register("pi_id_future_commute", "fock-core", "pi_id(Z)_j commutes with every cell operator at k >= j")
def _pi_commute(grid, rng):
    j = int(rng.integers(0, grid.n_cells))
    k = int(rng.integers(j, grid.n_cells))
    P = pi_id(random_operator(grid.dim, rng), j)
    out = []
    for kind in ("annihilate", "create", "number"):
        A = cell_op(grid, k, kind)
        out.append(P @ A - A @ P)
    return out


@register("lattice_commuting", "fock-core", "meet(P,Q) = PQ and join(P,Q) = P + Q - PQ for commuting P, Q")
def _lattice(grid, rng):
    p = np.diag((rng.random(grid.dim) < 0.5).astype(float)).astype(complex)
    q = np.diag((rng.random(grid.dim) < 0.5).astype(float)).astype(complex)
    _, u = np.linalg.eigh(fock.random_hermitian(grid.dim, rng))
    P, Q = u @ p @ u.conj().T, u @ q @ u.conj().T
    return [fock.meet_projections(P, Q) - P @ Q, fock.join_projections(P, Q) - (P + Q - P @ Q)]


@register("exp_inner_product", "fock-core", "<e(f), e(g)> = prod_k (1 + conj(f_k) g_k dt)")
def _exp_inner(grid, rng):
    f, g = _coeffs(grid, rng), _coeffs(grid, rng)
    x, y = exp_vector(grid, f), exp_vector(grid, g)
    target = np.prod(1 + np.conj(f) * g * grid.dt)
    return [abs(np.vdot(x, y) - target) / max(1.0, abs(target))]


# --- qsc-integrals -----------------------------------------------------------


def _ito_residuals(X, Y):
    prod = qi.ito_product(X, Y)
    xs, ys, ps = qi.semimartingale_values(X), qi.semimartingale_values(Y), qi.semimartingale_values(prod)
    return [p - x @ y for x, y, p in zip(xs, ys, ps)]


@register("ito_product_vacuum", "qsc-integrals", "vacuum-kind product integrands evaluate to X_j X'_j")
def _ito_vac(grid, rng):
    return _ito_residuals(sm.quadruple(grid, rng, "vacuum"), sm.quadruple(grid, rng, "vacuum"))


@register("ito_product_identity_grid", "qsc-integrals", "identity-kind product with grid corrections evaluates to X_j X'_j")
def _ito_id(grid, rng):
    return _ito_residuals(sm.quadruple(grid, rng, "identity"), sm.quadruple(grid, rng, "identity"))


@register("gauge_product", "qsc-integrals", "gauge integrals of vacuum-adapted N, N' multiply to the gauge integral of N N'")
def _gauge_prod(grid, rng):
    N, N2 = sm.adapted_process(grid, rng, "vacuum"), sm.adapted_process(grid, rng, "vacuum")
    NN = Process(grid, Kind.VACUUM, tuple(a @ b for a, b in zip(N.ops, N2.ops)))
    j = _time(grid, rng)
    return [qi.gauge_integral(N, j) @ qi.gauge_integral(N2, j) - qi.gauge_integral(NN, j)]


@register("weak_ito_gauge", "qsc-integrals", "weak product formula for gauge integrals with gradient a_k")
def _weak_ito(grid, rng):
    out = []
    for kind in ("vacuum", "identity"):
        N, N2 = sm.adapted_process(grid, rng, kind), sm.adapted_process(grid, rng, kind)
        x, x2 = sm.state_vector(grid, rng), sm.state_vector(grid, rng)
        lhs, rhs = qi.weak_ito_gauge(x, x2, N, N2, _time(grid, rng))
        out.append(abs(lhs - rhs))
    return out


@register("conjugate_tail_integral", "qsc-integrals", "Z (tail gauge integral of N) W = tail gauge integral of Z N W")
def _qsi(grid, rng):
    j = _time(grid, rng)
    kind = "vacuum" if rng.random() < 0.5 else "identity"
    N = sm.adapted_process(grid, rng, kind)
    Z, W = random_identity_adapted(grid, j, rng), random_identity_adapted(grid, j, rng)
    return [Z @ qi.gauge_integral(N, None, j) @ W - qi.conjugate_tail_integral(Z, W, N, j)]


@register("martingale_parts", "qsc-integrals", "R = 0 gives a martingale; adding a drift with nonzero vacuum mean does not")
def _mg_parts(grid, rng):
    X = sm.quadruple(grid, rng, "vacuum", martingale=True)
    defect = qi.martingale_defect(qi.semimartingale_process(X))
    r = rng.standard_normal() + 1j * rng.standard_normal()
    R = Process.from_function(grid, Kind.VACUUM, lambda j: r * e_projection(grid, j))
    Xr = QSIntegrands(X.initial, X.N, X.P, X.Q, R)
    return [defect, _flag(not qi.is_martingale(qi.semimartingale_process(Xr)))]


@register("gauge_norm_vacuum", "qsc-integrals", "||(gauge integral of N) e(f)||^2 <= sum_k ||N_k a_k e(f)||^2 for vacuum-adapted N")
def _qsiestimate(grid, rng):
    N = sm.adapted_process(grid, rng, "vacuum")
    lhs, bound = qi.gauge_norm_estimate(N, _coeffs(grid, rng))
    return [max(0.0, lhs - bound) / max(1.0, bound)]


@register("switch_representation", "qsc-integrals", "switched integrands evaluate to pi_id(X_j)_j")
def _switch(grid, rng):
    X = sm.quadruple(grid, rng, "vacuum")
    Y = qi.switch_representation(X)
    return [y - pi_id(x, j) for j, (x, y) in enumerate(zip(qi.semimartingale_values(X), qi.semimartingale_values(Y)))]


@register("increment_decomposition", "qsc-integrals", "vacuum-adapted integrands are recovered from their increment")
def _decomp_inc(grid, rng):
    X = sm.quadruple(grid, rng, "vacuum")
    k = int(rng.integers(0, grid.n_cells))
    got = qi.decompose_increment(grid, qi.increment(X, k), k)
    return [a - b for a, b in zip(got, (X.N[k], X.P[k], X.Q[k], X.R[k]))]


# --- stopping-times ----------------------------------------------------------


def _random_subset(support, rng):
    return {t for t in support if rng.random() < 0.5}


def _measure(S, A):
    return sum((S.atom(t) for t in A), np.zeros((S.grid.dim, S.grid.dim), dtype=complex))


@register("spectral_measure_algebra", "stopping-times", "S(A)S(B) = S(A & B), additivity and monotonicity")
def _prop23(grid, rng):
    S = sm.stopping_time(grid, rng)
    times = list(range(grid.n_cells + 1)) + [INF]
    A, B = _random_subset(times, rng), _random_subset(times, rng)
    SA, SB = _measure(S, A), _measure(S, B)
    return [
        SA @ SB - _measure(S, A & B),
        _measure(S, A | B) - (SA + SB - _measure(S, A & B)),
        _neg_part(_measure(S, A | B) - SA),
    ]


def _random_chain(n, rng):
    """Partitions of 0..n, each refining the previous one, ending at the full grid."""
    part = {0, n}
    chain = [sorted(part)]
    inner = list(rng.permutation(np.arange(1, n)))
    while inner:
        step = int(rng.integers(1, len(inner) + 1))
        part |= {int(v) for v in inner[:step]}
        inner = inner[step:]
        chain.append(sorted(part))
    return chain


@register("refinement_monotone", "stopping-times", "coarse time projections decrease under refinement down to E_S", fixed_tol=1e-8)
def _refinement(grid, rng):
    S = sm.stopping_time(grid, rng)
    chain = [st.time_projection_coarse(S, p) for p in _random_chain(grid.n_cells, rng)]
    out = [_neg_part(a - b) for a, b in zip(chain, chain[1:])]
    out.append(float(np.linalg.norm(chain[-1] - st.time_projection(S))))
    return out


@register("time_projection_integrals", "stopping-times", "E_S equals both gauge-integral forms and the identity-adapted form")
def _tp_integrals(grid, rng):
    S = sm.stopping_time(grid, rng)
    ES = st.time_projection(S)
    return [
        ES - st.time_projection_integral(S, "complement"),
        ES - st.time_projection_integral(S, "vacuum"),
        ES - st.time_projection_integral_id(S),
    ]


@register("ordered_projections", "stopping-times", "S <= T implies E_S E_T = E_S = E_T E_S")
def _ordered(grid, rng):
    S, T = sm.ordered_pair(grid, rng)
    ES, ET = st.time_projection(S), st.time_projection(T)
    return [ES @ ET - ES, ET @ ES - ES, st.cumulative_psd_gap(S, T)]


@register("lattice_projections", "stopping-times", "E of S meet T and S join T are the meet and join of E_S, E_T")
def _lattice_projections(grid, rng):
    S, T = sm.stopping_time(grid, rng), sm.stopping_time(grid, rng)
    ES, ET = st.time_projection(S), st.time_projection(T)
    return [
        st.time_projection(st.qst_meet(S, T)) - fock.meet_projections(ES, ET),
        st.time_projection(st.qst_join(S, T)) - fock.join_projections(ES, ET),
    ]


@register("commuting_projections", "stopping-times", "commuting cumulative families give commuting time projections")
def _commuting(grid, rng):
    _, u = np.linalg.eigh(fock.random_hermitian(2, rng))
    # one cell-wise unitary keeps diagonal stopping times adapted and commuting
    V = np.ones((1, 1))
    for _ in range(grid.n_cells):
        V = np.kron(u, V)
    S, T = st.random_classical_qst(grid, rng), st.random_classical_qst(grid, rng)
    S = st.qst_new(grid, {t: V @ P @ V.conj().T for t, P in S.atoms.items()})
    T = st.qst_new(grid, {t: V @ P @ V.conj().T for t, P in T.atoms.items()})
    ES, ET = st.time_projection(S), st.time_projection(T)
    return [ES @ ET - ET @ ES]


@register("stop_at_constant", "stopping-times", "E_S E_j = E_{S ^ t_j} = E_j E_S")
def _stop_at_constant(grid, rng):
    S = sm.stopping_time(grid, rng)
    j = _time(grid, rng)
    ES, Ej = st.time_projection(S), e_projection(grid, j)
    ESj = st.time_projection(st.qst_min_const(S, j))
    return [ES @ Ej - ESj, Ej @ ES - ESj]


@register("wedge_decomposition", "stopping-times", "S([0,t])E_S + S((t,inf])E_t = E_{S ^ t} = E_S E_t")
def _prop311(grid, rng):
    S = sm.stopping_time(grid, rng)
    j = _time(grid, rng)
    W = st.e_s_wedge_const(S, j)
    return [W - st.time_projection(st.qst_min_const(S, j)), W - st.time_projection(S) @ e_projection(grid, j)]


@register("gradient_pythagoras", "stopping-times", "||(E_S - E_T)x||^2 and ||E_S x||^2 as sums over adapted gradients")
def _pythag(grid, rng):
    S, T = sm.stopping_time(grid, rng), sm.stopping_time(grid, rng)
    x = sm.state_vector(grid, rng)
    a, b = st.es_distance_sq(S, T, x)
    c, d = st.es_norm_sq(S, x)
    return [abs(a - b), abs(c - d)]


@register("round_up_continuity", "stopping-times", "rounding S up along refining partitions brings E_S x down monotonically")
def _continuity(grid, rng):
    S = sm.stopping_time(grid, rng)
    x = sm.state_vector(grid, rng)
    out, prev = [], None
    for p in _random_chain(grid.n_cells, rng):
        Sp = st.round_up(S, p)
        E = st.time_projection(Sp)
        out.append(E - st.time_projection_coarse(S, p))
        dist = float(np.linalg.norm((E - st.time_projection(S)) @ x))
        if prev is not None:
            out.append(max(0.0, dist - prev))
        prev = dist
        out.append(st.cumulative_psd_gap(S, Sp))
    return out


@register("chaos_example", "stopping-times", "E_{S_n} = P_{n+1} on the grid and S_n <= S_{n+1}")
def _chaos(grid, rng):
    L = int(rng.integers(0, grid.n_cells))
    S, S2 = st.chaos_qst(grid, L), st.chaos_qst(grid, L + 1)
    return [st.time_projection(S) - st.chaos_projection(grid, L + 1), st.cumulative_psd_gap(S, S2)]


@register("lattice_order", "stopping-times", "S ^ T <= S <= S v T")
def _order(grid, rng):
    S, T = sm.stopping_time(grid, rng), sm.stopping_time(grid, rng)
    return [st.cumulative_psd_gap(st.qst_meet(S, T), S), st.cumulative_psd_gap(S, st.qst_join(S, T))]


# --- stopped-processes -------------------------------------------------------


@register("conditional_expectation", "stopped-processes", "Z -> E_S Z E_S is a vacuum-preserving conditional expectation")
def _prop42(grid, rng):
    probe = sp.StoppedAlgebraProbe(sm.stopping_time(grid, rng), [random_operator(grid.dim, rng) for _ in range(3)])
    return list(sp.conditional_expectation_probe(probe, "vac").values())


@register("closed_martingales", "stopped-processes", "pi_vac(Z), pi_id(Z) and the stopped Z^S are martingales closed by their limits")
def _props5(grid, rng):
    Z = random_operator(grid.dim, rng)
    S = sm.stopping_time(grid, rng)
    Zs = sp.stopped_martingale_process(Z, S)
    out = [
        qi.martingale_defect(sm.closed_martingale(grid, Z, "vacuum")),
        qi.martingale_defect(sm.closed_martingale(grid, Z, "identity")),
        qi.martingale_defect(Zs),
    ]
    for j in range(grid.n_cells + 1):
        E = st.time_projection(st.qst_min_const(S, j))
        out.append(Zs[j] - E @ Z @ E)
    return out


@register("deterministic_stops", "stopped-processes", "stopping at a constant time t gives pi_vac(X_t)_t and pi_id(X_t)_t")
def _det_stop(grid, rng):
    X = sm.adapted_process(grid, rng, "adapted", closing=True)
    j = _time(grid, rng)
    T = st.deterministic(grid, j)
    I = Process.constant(grid, np.eye(grid.dim, dtype=complex))
    return [
        sp.stop_process_discrete_vac(X, T) - pi_vac(X[j], j),
        sp.stop_process_discrete_id(X, T) - pi_id(X[j], j),
        sp.stop_process_discrete_id(I, sm.stopping_time(grid, rng)) - np.eye(grid.dim),
    ]


def _const(grid, Z):
    return Process.constant(grid, Z)


@register("double_stops", "stopped-processes", "stopping a stopped value again at T, in all four flavour pairs")
def _prop63(grid, rng):
    X = sm.adapted_process(grid, rng, "adapted", closing=True)
    T = sm.stopping_time(grid, rng)
    Xv, Xi = sp.stop_process_discrete_vac(X, T), sp.stop_process_discrete_id(X, T)
    return [
        sp.stop_process_discrete_vac(_const(grid, Xv), T) - Xv,
        sp.stop_process_discrete_vac(_const(grid, Xi), T) - Xv,
        sp.stop_process_discrete_id(_const(grid, Xv), T) - Xi,
        sp.stop_process_discrete_id(_const(grid, Xi), T) - Xi,
    ]


@register("stopped_before_t", "stopped-processes", "T([0,t]) X_T T([0,t]) = T([0,t]) X_{T^t} T([0,t]); X_T E_T = E_T X_T = X_T(vac)")
def _prop64(grid, rng):
    X = sm.adapted_process(grid, rng, "adapted", closing=True)
    T = sm.stopping_time(grid, rng)
    j = _time(grid, rng)
    Tj = st.qst_min_const(T, j)
    C = T.cumulative(j)
    ET = st.time_projection(T)
    Xv, Xi = sp.stop_process_discrete_vac(X, T), sp.stop_process_discrete_id(X, T)
    return [
        C @ Xv @ C - C @ sp.stop_process_discrete_vac(X, Tj) @ C,
        C @ Xi @ C - C @ sp.stop_process_discrete_id(X, Tj) @ C,
        Xi @ ET - Xv,
        ET @ Xi - Xv,
    ]


@register("stopped_process_adapted", "stopped-processes", "X stopped at T ^ t is vacuum- or identity-adapted at t")
def _prop65(grid, rng):
    X = sm.adapted_process(grid, rng, "adapted", closing=True)
    T = sm.stopping_time(grid, rng)
    j = _time(grid, rng)
    Tj = st.qst_min_const(T, j)
    Xv, Xi = sp.stop_process_discrete_vac(X, Tj), sp.stop_process_discrete_id(X, Tj)
    return [pi_vac(Xv, j) - Xv, pi_id(Xi, j) - Xi]


@register("discrete_martingale_stop", "stopped-processes", "a martingale stopped at T equals E_T M_t E_T for t past the support")
def _discrete_mg_stop(grid, rng):
    kind = "vacuum" if rng.random() < 0.5 else "identity"
    M = sm.closed_martingale(grid, random_operator(grid.dim, rng), kind)
    T = sm.stopping_time(grid, rng)
    ET = st.time_projection(T)
    last = T.support[-1]
    out = [sp.stop_process_discrete_vac(M, T) - ET @ M.at_infinity() @ ET]
    if last != INF:
        for t in range(last, grid.n_cells + 1):
            out.append(sp.stop_process_discrete_vac(M, T) - ET @ M[t] @ ET)
    return out


@register("stopped_martingales", "stopped-processes", "E_t M_T E_t = M_{T^t} and pi_id(M_T)_t = M_{T^t} (hat)")
def _stopped_mgs(grid, rng):
    kind = "vacuum" if rng.random() < 0.5 else "identity"
    M = sm.closed_martingale(grid, random_operator(grid.dim, rng), kind)
    T = sm.stopping_time(grid, rng)
    Mv, Mi = sp.stop_process_discrete_vac(M, T), sp.stop_process_discrete_id(M, T)
    out = []
    vals_v, vals_i = [], []
    for j in range(grid.n_cells + 1):
        Tj = st.qst_min_const(T, j)
        vals_v.append(sp.stop_process_discrete_vac(M, Tj))
        vals_i.append(sp.stop_process_discrete_id(M, Tj))
        out.append(pi_vac(Mv, j) - vals_v[-1])
        out.append(pi_id(Mi, j) - vals_i[-1])
    out.append(qi.martingale_defect(Process(grid, Kind.VACUUM, tuple(vals_v), Mv)))
    out.append(qi.martingale_defect(Process(grid, Kind.IDENTITY, tuple(vals_i), Mi)))
    return out


@register("martingale_by_stopping", "stopped-processes", "the two-point stopping test agrees with the martingale test")
def _mg_by_stopping(grid, rng):
    Z = random_operator(grid.dim, rng)
    if rng.random() < 0.5:
        X = sm.closed_martingale(grid, Z, "vacuum")
        X = Process(grid, Kind.VACUUM, X.ops)
    else:
        X = sm.adapted_process(grid, rng, "vacuum")
    return [_flag(bool(sp.mgchar_test(X, rng)) == qi.is_martingale(X))]


@register("closed_martingale_stop", "stopped-processes", "E_S M_S E_S = M_S, E_t M_{S^t} E_t = M_{S^t}, and the restriction identity")
def _closed_mg_stop(grid, rng):
    Z = random_operator(grid.dim, rng)
    M = sm.closed_martingale(grid, Z, "vacuum")
    S = sm.stopping_time(grid, rng)
    j = _time(grid, rng)
    ES = st.time_projection(S)
    C = S.cumulative(j)
    Ms = sp.stop_closed_martingale(M, S, "vac")
    Mj = sp.stop_closed_martingale(M, st.qst_min_const(S, j), "vac")
    Ej = e_projection(grid, j)
    ESj = st.time_projection(st.qst_min_const(S, j))
    return [
        ES @ Ms @ ES - Ms,
        Ej @ Mj @ Ej - Mj,
        ESj @ Ms @ ESj - Mj,
        C @ Ms @ C - C @ Mj @ C,
    ]


@register("optional_sampling_vacuum", "stopped-processes", "(M_S)_T = M_S = (M_T)_S for S <= T")
def _optional_vac(grid, rng):
    Z = random_operator(grid.dim, rng)
    S, T = sm.ordered_pair(grid, rng)
    Ms, Mt = sp.stop_op_vac(Z, S), sp.stop_op_vac(Z, T)
    return [sp.stop_op_vac(Ms, T) - Ms, sp.stop_op_vac(Mt, S) - Ms]


@register("optional_sampling_identity", "stopped-processes", "(Z_T)_S = Z_S (identity flavour) for S <= T")
def _optional_id(grid, rng):
    Z = random_operator(grid.dim, rng)
    S, T = sm.ordered_pair(grid, rng)
    return [sp.stop_op_id(sp.stop_op_id(Z, T), S) - sp.stop_op_id(Z, S)]


@register("compression_split", "stopped-processes", "pi_id(Z)_t = pi_vac(Z)_t plus a gauge tail, in both forms")
def _mint(grid, rng):
    Z = random_operator(grid.dim, rng)
    j = _time(grid, rng)
    out = []
    for form in ("id", "vac"):
        v, tail = sp.mint_decompose(Z, j, form)
        out.append(v + tail - pi_id(Z, j))
    return out


@register("identity_closed_stop", "stopped-processes", "stopping a constant or an identity martingale at T gives Z_T (hat)")
def _identity_closed_stop(grid, rng):
    Z = random_operator(grid.dim, rng)
    T = sm.stopping_time(grid, rng)
    Zh = sp.stop_op_id(Z, T)
    return [
        sp.stop_process_discrete_id(_const(grid, Z), T) - Zh,
        sp.stop_process_discrete_id(sm.closed_martingale(grid, Z, "identity"), T) - Zh,
    ]


@register("stopping_idempotent", "stopped-processes", "both flavours are idempotent and interchangeable; E_S Z_S(hat) = Z_S(vac)")
def _prop78(grid, rng):
    Z = random_operator(grid.dim, rng)
    S = sm.stopping_time(grid, rng)
    Zv, Zh = sp.stop_op_vac(Z, S), sp.stop_op_id(Z, S)
    return [
        sp.stop_op_vac(Zv, S) - Zv,
        sp.stop_op_vac(Zh, S) - Zv,
        sp.stop_op_id(Zv, S) - Zh,
        sp.stop_op_id(Zh, S) - Zh,
        st.time_projection(S) @ Zh - Zv,
    ]


@register("identity_stop_norm", "stopped-processes", "||Z_S(hat)|| <= ||Z|| and the gauge Pythagoras identity behind it", fixed_tol=1e-8)
def _norm(grid, rng):
    Z = random_operator(grid.dim, rng)
    S = sm.stopping_time(grid, rng)
    Zv, Zh = sp.stop_op_vac(Z, S), sp.stop_op_id(Z, S)
    th = sm.state_vector(grid, rng)
    lhs = np.linalg.norm(Zh @ th) ** 2 - np.linalg.norm(Zv @ th) ** 2
    rhs = sum(
        np.linalg.norm(S.cumulative(k) @ pi_id(Zv, k) @ S.cumulative(k) @ annihilate_vec(th, k)) ** 2
        for k in range(grid.n_cells)
    )
    return [max(0.0, fock.operator_norm(Zh) - fock.operator_norm(Z)), abs(lhs - rhs)]


@register("time_projection_gauge_split", "stopped-processes", "pi_id(E_S)_t as gauge sums before and after t")
def _idtpint(grid, rng):
    S = sm.stopping_time(grid, rng)
    a, b, c = sp.idtpint_check(S, _time(grid, rng))
    return [a - b, a - c]


@register("noncommutative_defect_grid", "stopped-processes", "Z_S W_S - (Z_S W)_S (hat) as a gauge sum")
def _noncomm(grid, rng):
    Z, W = random_operator(grid.dim, rng), random_operator(grid.dim, rng)
    S = sm.stopping_time(grid, rng)
    lhs, _ = sp.noncomm_defect(Z, W, S)
    return [lhs - sp.noncomm_defect_grid(Z, W, S)]


def _fv(grid, rng):
    return sp.FVProcess(sm.adapted_process(grid, rng, "vacuum" if rng.random() < 0.5 else "identity"))


@register("fv_stop_vacuum", "stopped-processes", "stopped FV process equals the discrete vacuum stop")
def _fv_vac(grid, rng):
    Y = _fv(grid, rng)
    T = sm.stopping_time(grid, rng)
    return [sp.stop_fv_vac(Y, T) - sp.stop_process_discrete_vac(Y.as_process(), T)]


@register("fv_identity_split", "stopped-processes", "pi_id(Y_t)_t = compression + gauge sum - time sum")
def _idfvint(grid, rng):
    Y = _fv(grid, rng)
    j = _time(grid, rng)
    comp, gauge, timed = sp.idfvint_decompose(Y, j)
    return [comp + gauge - timed - pi_id(Y.values()[j], j)]


@register("fv_stop_identity", "stopped-processes", "identity-flavour stopped FV process from its gauge and time sums; killed gauge term")
def _fv_id(grid, rng):
    Y = _fv(grid, rng)
    T = sm.stopping_time(grid, rng)
    return [
        sp.stop_fv_id_discrete(Y, T) - sp.stop_process_discrete_id(Y.as_process(), T),
        sp.killed_gauge(Y, T),
    ]


@register("martingale_fv_split", "stopped-processes", "a martingale plus an FV process is split back uniquely")
def _mg_fv_split(grid, rng):
    M = sm.closed_martingale(grid, random_operator(grid.dim, rng), "vacuum")
    Y = sp.FVProcess(sm.adapted_process(grid, rng, "vacuum"))
    vals = Y.values()
    X = Process(grid, Kind.VACUUM, tuple(m + y for m, y in zip(M.ops, vals)))
    M2, H2 = sp.decompose_semimartingale(X)
    return [a - b for a, b in zip(M2.ops, M.ops)] + [a - b for a, b in zip(H2.ops[:-1], Y.H.ops[:-1])]


@register("stopped_semimartingale", "stopped-processes", "stopped integrands evaluate to the stopped semimartingale")
def _stopped_smg(grid, rng):
    X = sm.quadruple(grid, rng, "vacuum")
    S = sm.stopping_time(grid, rng)
    stopped = qi.semimartingale_values(sp.stop_semimartingale_vac(X, S))[-1]
    value = sp.stopped_semimartingale_value(X, S)
    return [stopped - value, value - sp.stop_process_discrete_vac(qi.semimartingale_process(X), S)]


# --- classical-bridge ----------------------------------------------------------


def _random_adapted_tau(model, rng):
    grid = model.grid
    n = grid.n_cells
    choice = rng.integers(0, 3)
    if choice == 0:
        level = int(rng.integers(-2, 3)) if model.flavour == "symmetric" else int(rng.integers(0, 3))
        return bridge.first_passage(model, level)
    if choice == 1 and model.flavour == "poisson":
        return bridge.jump_time(model, int(rng.integers(0, 3)))
    rate = rng.uniform(0.1, 0.6)
    decide = {}
    tau = []
    for w in range(grid.dim):
        out = INF
        for j in range(1, n + 1):
            key = (j, w & ((1 << j) - 1))
            if key not in decide:
                decide[key] = rng.random() < rate
            if decide[key]:
                out = j
                break
        tau.append(out)
    return bridge.classical_stopping_time(grid, tau)


@register("bridge_conditioning", "classical-bridge", "U E_T U^+ is conditioning at tau", max_cells=6)
def _bridge(grid, rng):
    model = bridge.walk_model(grid, "symmetric" if rng.random() < 0.5 else "poisson")
    tau = _random_adapted_tau(model, rng)
    U = model.U
    T = bridge.classical_st_to_qst(model, tau)
    K = bridge.conditional_expectation_matrix(model, tau)
    X = rng.standard_normal(grid.dim)
    return [
        U @ st.time_projection(T) @ U.T - K,
        model.weigh(bridge.conditional_expectation(model, X, tau)) - K @ model.weigh(X),
    ]


@register("bridge_past_conditioning", "classical-bridge", "U E_j U^+ is conditioning on the first j coordinates", max_cells=6)
def _bridge_ej(grid, rng):
    model = bridge.walk_model(grid, "symmetric" if rng.random() < 0.5 else "poisson")
    j = _time(grid, rng)
    tau = bridge.classical_stopping_time(grid, [j] * grid.dim)
    return [model.U @ e_projection(grid, j) @ model.U.T - bridge.conditional_expectation_matrix(model, tau)]


@register("poisson_counting", "classical-bridge", "1{tau_n <= t_j} = sum_k 1{nu_k = n-1} dnu_k")
def _counting(grid, rng):
    model = bridge.walk_model(grid, "poisson")
    lhs, rhs = bridge.poisson_sde_check(model, int(rng.integers(1, 4)), _time(grid, rng))
    return [lhs - rhs]


@register("jump_time_order", "classical-bridge", "T_m <= T_{m+1} for the jump-time stopping times", max_cells=6)
def _jump_order(grid, rng):
    model = bridge.walk_model(grid, "poisson")
    m = int(rng.integers(0, 3))
    A = bridge.classical_st_to_qst(model, bridge.jump_time(model, m))
    B = bridge.classical_st_to_qst(model, bridge.jump_time(model, m + 1))
    return [st.cumulative_psd_gap(A, B)]


def suite_names() -> list[str]:
    return list(REGISTRY)


def cases_grid(identity: Identity, grid: Grid) -> Grid:
    if identity.max_cells is not None and grid.n_cells > identity.max_cells:
        return fock.make_grid(identity.max_cells, grid.t_max)
    return grid

