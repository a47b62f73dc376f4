"""Discrete quantum stochastic integrals on the toy Fock space.

All four integrals use the left-point rule: the integrand sampled at t_k meets
the increment of cell k.  With the unnormalised cell operators

    gauge         sum_k a_k^+ N_k a_k
    annihilation  sum_k sqrt(dt) P_k a_k
    creation      sum_k sqrt(dt) a_k^+ Q_k
    time          sum_k dt R_k

the coherent-vector matrix elements of each integral are Riemann sums of the
continuum ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ContractError, ShapeError
from .fock import (
    Grid,
    annihilate_vec,
    check_operator,
    check_time,
    check_vector,
    create_times,
    exact_tolerance,
    exp_vector,
    is_identity_adapted,
    is_vacuum_adapted,
    lower,
    pi_id,
    times_annihilate,
    _e_diag,
)


class Kind(str, Enum):
    GENERAL = "general"
    ADAPTED = "adapted"
    VACUUM = "vacuum"
    IDENTITY = "identity"


def _commutes_with_e(Z: np.ndarray, j: int, tol: float) -> bool:
    d = _e_diag(int(np.log2(Z.shape[0])), j)
    return bool(np.linalg.norm(Z * d[None, :] - d[:, None] * Z) <= tol)


def adaptedness_check(kind: Kind, Z: np.ndarray, j: int, tol: float | None = None) -> bool:
    tol = exact_tolerance(Z.shape[0]) if tol is None else tol
    if kind is Kind.VACUUM:
        return is_vacuum_adapted(Z, j, tol)
    if kind is Kind.IDENTITY:
        return is_identity_adapted(Z, j, tol)
    if kind is Kind.ADAPTED:
        return _commutes_with_e(Z, j, tol)
    return True


@dataclass(frozen=True, eq=False)
class Process:
    """Operator values at the grid times t_0..t_n, plus an optional value at infinity."""

    grid: Grid
    kind: Kind
    ops: tuple
    closing: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        ops = tuple(np.asarray(check_operator(self.grid, op), dtype=complex) for op in self.ops)
        if len(ops) != self.grid.n_cells + 1:
            raise ShapeError(f"a process needs {self.grid.n_cells + 1} values, got {len(ops)}")
        object.__setattr__(self, "ops", ops)
        for j, op in enumerate(ops):
            if not adaptedness_check(self.kind, op, j):
                raise ContractError(f"value at t_{j} is not {self.kind.value}-adapted")
        if self.closing is not None:
            object.__setattr__(
                self, "closing", np.asarray(check_operator(self.grid, self.closing), dtype=complex)
            )

    def __getitem__(self, j: int) -> np.ndarray:
        return self.ops[j]

    def __len__(self) -> int:
        return len(self.ops)

    def at_infinity(self) -> np.ndarray:
        if self.closing is None:
            return np.zeros((self.grid.dim, self.grid.dim), dtype=complex)
        return self.closing

    @classmethod
    def from_function(cls, grid: Grid, kind, fn: Callable[[int], np.ndarray], closing=None) -> "Process":
        return cls(grid, Kind(kind), tuple(fn(j) for j in range(grid.n_cells + 1)), closing)

    @classmethod
    def constant(cls, grid: Grid, Z: np.ndarray, kind=Kind.GENERAL) -> "Process":
        return cls(grid, Kind(kind), tuple(Z for _ in range(grid.n_cells + 1)), Z)

    @classmethod
    def zero(cls, grid: Grid, kind=Kind.VACUUM) -> "Process":
        z = np.zeros((grid.dim, grid.dim), dtype=complex)
        return cls.constant(grid, z, kind)


@dataclass(frozen=True, eq=False)
class QSIntegrands:
    """Initial value and the gauge, annihilation, creation and time integrands."""

    initial: np.ndarray
    N: Process
    P: Process
    Q: Process
    R: Process

    def __post_init__(self):
        grid, kind = self.N.grid, self.N.kind
        for proc in (self.P, self.Q, self.R):
            if proc.grid != grid:
                raise ShapeError("integrands live on different grids")
            if proc.kind is not kind:
                raise ContractError("integrands must share one adaptedness kind")
        if kind not in (Kind.VACUUM, Kind.IDENTITY):
            raise ContractError(f"integrands must be vacuum- or identity-adapted, not {kind.value}")
        init = np.asarray(check_operator(grid, self.initial), dtype=complex)
        if not adaptedness_check(kind, init, 0):
            raise ContractError(f"initial value is not {kind.value}-adapted at time 0")
        object.__setattr__(self, "initial", init)

    @property
    def grid(self) -> Grid:
        return self.N.grid

    @property
    def kind(self) -> Kind:
        return self.N.kind


def _require_integrand(X: Process) -> None:
    if X.kind not in (Kind.VACUUM, Kind.IDENTITY):
        raise ContractError(f"integrand must be vacuum- or identity-adapted, not {X.kind.value}")


def _range(X: Process, j_end: int | None, j_start: int) -> range:
    n = X.grid.n_cells
    j_end = n if j_end is None else j_end
    check_time(X.grid, j_end)
    check_time(X.grid, j_start)
    return range(j_start, j_end)


def gauge_integral(N: Process, j_end: int | None = None, j_start: int = 0) -> np.ndarray:
    _require_integrand(N)
    out = np.zeros((N.grid.dim, N.grid.dim), dtype=complex)
    for k in _range(N, j_end, j_start):
        out += lower(N[k], k)
    return out


def annihilation_integral(P: Process, j_end: int | None = None, j_start: int = 0) -> np.ndarray:
    _require_integrand(P)
    out = np.zeros((P.grid.dim, P.grid.dim), dtype=complex)
    for k in _range(P, j_end, j_start):
        out += times_annihilate(P[k], k)
    return np.sqrt(P.grid.dt) * out


def creation_integral(Q: Process, j_end: int | None = None, j_start: int = 0) -> np.ndarray:
    _require_integrand(Q)
    out = np.zeros((Q.grid.dim, Q.grid.dim), dtype=complex)
    for k in _range(Q, j_end, j_start):
        out += create_times(Q[k], k)
    return np.sqrt(Q.grid.dt) * out


def time_integral(R: Process, j_end: int | None = None, j_start: int = 0) -> np.ndarray:
    _require_integrand(R)
    out = np.zeros((R.grid.dim, R.grid.dim), dtype=complex)
    for k in _range(R, j_end, j_start):
        out += R[k]
    return R.grid.dt * out


def increment(S: QSIntegrands, k: int) -> np.ndarray:
    """X_{k+1} - X_k."""
    rt = np.sqrt(S.grid.dt)
    return (
        lower(S.N[k], k)
        + rt * times_annihilate(S.P[k], k)
        + rt * create_times(S.Q[k], k)
        + S.grid.dt * S.R[k]
    )


def semimartingale_values(S: QSIntegrands) -> list[np.ndarray]:
    vals = [S.initial.copy()]
    for k in range(S.grid.n_cells):
        vals.append(vals[-1] + increment(S, k))
    return vals


def semimartingale_eval(S: QSIntegrands, j: int) -> np.ndarray:
    check_time(S.grid, j)
    return semimartingale_values(S)[j]


def semimartingale_process(S: QSIntegrands) -> Process:
    vals = semimartingale_values(S)
    return Process(S.grid, S.kind, tuple(vals), vals[-1])


def martingale_defect(X: Process) -> float:
    """max over j <= k of ||E_j X_k E_j - X_j E_j||, infinity included if closed."""
    if X.kind is Kind.GENERAL:
        raise ContractError("martingale test needs an adapted process")
    n = X.grid.n_cells
    later = list(X.ops) + ([X.closing] if X.closing is not None else [])
    worst = 0.0
    for j in range(n + 1):
        d = _e_diag(n, j)
        target = X[j] * d[None, :]
        for Xk in later[j:]:
            worst = max(worst, float(np.linalg.norm(d[:, None] * Xk * d[None, :] - target)))
    return worst


def is_martingale(X: Process, tol: float | None = None) -> bool:
    tol = X.grid.eps_exact if tol is None else tol
    return martingale_defect(X) <= tol


def _proc(grid: Grid, kind: Kind, ops: list) -> Process:
    return Process(grid, kind, tuple(ops))


def ito_product(X: QSIntegrands, Y: QSIntegrands, discrete: bool = True) -> QSIntegrands:
    """Integrands of the product process X_t Y_t.

    Vacuum kind uses the vacuum-adapted product rule, identity kind the
    identity-adapted one.  With ``discrete`` the O(dt) terms produced by
    products of a time increment with another increment (and, for identity
    kind, by a_k a_k^+ = 1 - n_k) are added, which makes the grid identity exact.
    """
    if X.grid != Y.grid:
        raise ShapeError("processes live on different grids")
    if X.kind is not Y.kind:
        raise ContractError("ito_product needs two processes of the same kind")
    grid, kind, dt = X.grid, X.kind, X.grid.dt
    xs, ys = semimartingale_values(X), semimartingale_values(Y)
    Ns, Ps, Qs, Rs = [], [], [], []
    for k in range(grid.n_cells + 1):
        N, P, Q, R = X.N[k], X.P[k], X.Q[k], X.R[k]
        N2, P2, Q2, R2 = Y.N[k], Y.P[k], Y.Q[k], Y.R[k]
        x, y = xs[k], ys[k]
        if kind is Kind.VACUUM:
            n_ = N @ N2
            p_ = x @ P2 + P @ N2
            q_ = Q @ y + N @ Q2
            r_ = x @ R2 + R @ y + P @ Q2
            if discrete:
                n_ = n_ + dt * (Q @ P2)
                p_ = p_ + dt * (R @ P2)
                q_ = q_ + dt * (Q @ R2)
                r_ = r_ + dt * (R @ R2)
        else:
            n_ = x @ N2 + N @ y + N @ N2
            p_ = x @ P2 + P @ y + P @ N2
            q_ = x @ Q2 + Q @ y + N @ Q2
            r_ = x @ R2 + R @ y + P @ Q2
            if discrete:
                n_ = n_ + dt * (N @ R2 + R @ N2 + Q @ P2 - P @ Q2)
                p_ = p_ + dt * (P @ R2 + R @ P2)
                q_ = q_ + dt * (Q @ R2 + R @ Q2)
                r_ = r_ + dt * (R @ R2)
        Ns.append(n_)
        Ps.append(p_)
        Qs.append(q_)
        Rs.append(r_)
    return QSIntegrands(
        X.initial @ Y.initial,
        _proc(grid, kind, Ns),
        _proc(grid, kind, Ps),
        _proc(grid, kind, Qs),
        _proc(grid, kind, Rs),
    )


def weak_ito_gauge(x: np.ndarray, x2: np.ndarray, N: Process, N2: Process, j: int) -> tuple[complex, complex]:
    """Both sides of the weak product formula for two gauge integrals.

    Returns <X_j x, X'_j x'> and the sum over cells k < j of the three
    gradient pairings, with the discrete gradient a_k.  For identity-adapted
    integrands the cross terms use X_k a_k x.  For vacuum-adapted ones the
    partial integral is applied first, a_k X_k x, which is the ordering under
    which the vacuum product rule holds.
    """
    _require_integrand(N)
    _require_integrand(N2)
    if N.kind is not N2.kind:
        raise ContractError("weak_ito_gauge needs two integrands of the same kind")
    grid = N.grid
    check_vector(grid, x)
    check_vector(grid, x2)
    check_time(grid, j)
    X = np.zeros((grid.dim, grid.dim), dtype=complex)
    X2 = np.zeros_like(X)
    rhs = 0j
    for k in range(j):
        ax, ax2 = annihilate_vec(x, k), annihilate_vec(x2, k)
        if N.kind is Kind.IDENTITY:
            cx, cx2 = X @ ax, X2 @ ax2
        else:
            cx, cx2 = annihilate_vec(X @ x, k), annihilate_vec(X2 @ x2, k)
        nx, nx2 = N[k] @ ax, N2[k] @ ax2
        rhs += np.vdot(cx, nx2) + np.vdot(nx, cx2) + np.vdot(nx, nx2)
        X = X + lower(N[k], k)
        X2 = X2 + lower(N2[k], k)
    lhs = np.vdot(X @ x, X2 @ x2)
    return complex(lhs), complex(rhs)


def conjugate_tail_integral(Z: np.ndarray, W: np.ndarray, N: Process, j_start: int) -> np.ndarray:
    """sum_{k >= j_start} a_k^+ Z N_k W a_k, which equals Z (tail gauge integral of N) W."""
    _require_integrand(N)
    grid = N.grid
    check_time(grid, j_start)
    for name, op in (("Z", Z), ("W", W)):
        check_operator(grid, op)
        if not is_identity_adapted(op, j_start):
            raise ContractError(f"{name} must be identity-adapted at t_{j_start}")
    out = np.zeros((grid.dim, grid.dim), dtype=complex)
    for k in range(j_start, grid.n_cells):
        out += lower(Z @ N[k] @ W, k)
    return out


def gauge_norm_estimate(N: Process, f) -> tuple[float, float]:
    """||(gauge integral of N) e(f)||^2 and the bound C_f^2 sum_k ||N_k a_k e(f)||^2."""
    _require_integrand(N)
    grid = N.grid
    x = exp_vector(grid, f)
    lhs = float(np.linalg.norm(gauge_integral(N) @ x) ** 2)
    terms = sum(float(np.linalg.norm(N[k] @ annihilate_vec(x, k)) ** 2) for k in range(grid.n_cells))
    if N.kind is Kind.VACUUM:
        c = 1.0
    else:
        fn = float(np.sqrt(np.sum(np.abs(np.asarray(f)) ** 2) * grid.dt))
        c = fn + np.sqrt(1.0 + fn * fn)
    return lhs, c * c * terms


def switch_representation(X: QSIntegrands, discrete: bool = True) -> QSIntegrands:
    """Identity-adapted integrands of t -> pi_id(X_t)_t for a vacuum-kind X.

    The gauge integrand is pi_id(N_k - X_k)_k.  The discrete time increment
    sees the occupied state of cell k as well, so ``discrete`` subtracts
    dt * pi_id(R_k)_k from the gauge integrand to keep the grid identity exact.
    """
    if X.kind is not Kind.VACUUM:
        raise ContractError("switch_representation needs a vacuum-kind semimartingale")
    grid, dt = X.grid, X.grid.dt
    xs = semimartingale_values(X)
    Ns, Ps, Qs, Rs = [], [], [], []
    for k in range(grid.n_cells + 1):
        r = pi_id(X.R[k], k)
        n_ = pi_id(X.N[k] - xs[k], k)
        if discrete:
            n_ = n_ - dt * r
        Ns.append(n_)
        Ps.append(pi_id(X.P[k], k))
        Qs.append(pi_id(X.Q[k], k))
        Rs.append(r)
    kind = Kind.IDENTITY
    return QSIntegrands(
        pi_id(X.initial, 0),
        _proc(grid, kind, Ns),
        _proc(grid, kind, Ps),
        _proc(grid, kind, Qs),
        _proc(grid, kind, Rs),
    )


def decompose_increment(grid: Grid, D: np.ndarray, k: int) -> tuple[np.ndarray, ...]:
    """Recover vacuum-adapted (N_k, P_k, Q_k, R_k) from the increment they generate."""
    check_operator(grid, D)
    d = _e_diag(grid.n_cells, k)
    on = np.arange(grid.dim)[(np.arange(grid.dim) >> k) & 1 == 1]
    off = on ^ (1 << k)

    def ek(Z):
        return d[:, None] * Z * d[None, :]

    aD = np.zeros_like(D, dtype=complex)
    aD[off, :] = D[on, :]
    Da = np.zeros_like(D, dtype=complex)
    Da[:, off] = D[:, on]
    aDa = np.zeros_like(D, dtype=complex)
    aDa[:, off] = aD[:, on]
    rt = np.sqrt(grid.dt)
    return ek(aDa), ek(Da) / rt, ek(aD) / rt, ek(D) / grid.dt
