"""Stopping operators and processes at a quantum stopping time.

Two flavours run side by side.  The vacuum flavour compresses by the time
projection E_S.  The identity flavour adds, cell by cell, the part that
restarts after S, using the identity-adapted past block pi_id(., t_k).
Grid index ``INF`` stands for time infinity, where E is the identity and
pi_id is the identity map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .fock import _e_diag, lower, pi_id, random_adapted_projection
from .integrals import Kind, Process, QSIntegrands, is_martingale, semimartingale_values
from .stopping import INF, QuantumStoppingTime, time_projection, two_point_qst


def _e(grid, t) -> np.ndarray:
    return np.ones(grid.dim) if t == INF else _e_diag(grid.n_cells, t)


def _pi_id_at(Z: np.ndarray, t) -> np.ndarray:
    return Z if t == INF else pi_id(Z, t)


def _value(X: Process, t) -> np.ndarray:
    return X.at_infinity() if t == INF else X[t]


def stop_op_vac(Z: np.ndarray, S: QuantumStoppingTime) -> np.ndarray:
    """Z stopped at S, vacuum flavour: E_S Z E_S."""
    ES = time_projection(S)
    return ES @ Z @ ES


def stop_op_id(Z: np.ndarray, S: QuantumStoppingTime) -> np.ndarray:
    """Z stopped at S, identity flavour."""
    Zc = stop_op_vac(Z, S)
    out = Zc.copy()
    for k in range(S.grid.n_cells):
        C = S.cumulative(k)
        out += lower(C @ pi_id(Zc, k) @ C, k)
    return out


def stop_process_discrete_vac(X: Process, T: QuantumStoppingTime) -> np.ndarray:
    """sum_{i,j} T_i E_{t_i} X_{t_i v t_j} E_{t_j} T_j over the support of T."""
    grid = X.grid
    sup = T.support
    left = {t: T.atom(t) * _e(grid, t)[None, :] for t in sup}
    right = {t: _e(grid, t)[:, None] * T.atom(t) for t in sup}
    out = np.zeros((grid.dim, grid.dim), dtype=complex)
    for s in sup:
        for t in sup:
            out += left[s] @ _value(X, max(s, t)) @ right[t]
    return out


def stop_process_discrete_id(X: Process, T: QuantumStoppingTime) -> np.ndarray:
    """sum_{i,j} pi_id(E_{t_i} T_i X_{t_i v t_j} T_j E_{t_j}) at time t_i v t_j."""
    grid = X.grid
    sup = T.support
    left = {t: _e(grid, t)[:, None] * T.atom(t) for t in sup}
    right = {t: T.atom(t) * _e(grid, t)[None, :] for t in sup}
    out = np.zeros((grid.dim, grid.dim), dtype=complex)
    for s in sup:
        for t in sup:
            m = max(s, t)
            out += _pi_id_at(left[s] @ _value(X, m) @ right[t], m)
    return out


def stop_closed_martingale(M: Process, S: QuantumStoppingTime, flavour: str = "vac") -> np.ndarray:
    """M stopped at S for a martingale closed by M.closing."""
    if M.closing is None or not is_martingale(M):
        raise ContractError("stop_closed_martingale needs a martingale with a closing operator")
    if flavour == "vac":
        return stop_op_vac(M.closing, S)
    if flavour == "id":
        return stop_op_id(M.closing, S)
    raise ValueError(f"unknown flavour {flavour!r}")


def stopped_martingale_process(Z: np.ndarray, S: QuantumStoppingTime) -> Process:
    """The martingale t_j -> E_j Z_S E_j closed by E_S Z E_S."""
    Zs = stop_op_vac(Z, S)
    n = S.grid.n_cells
    ops = tuple(_e_diag(n, j)[:, None] * Zs * _e_diag(n, j)[None, :] for j in range(n + 1))
    return Process(S.grid, Kind.VACUUM, ops, Zs)


@dataclass
class MgCharResult:
    passed: bool
    witness: QuantumStoppingTime | None = None
    defect: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


def mgchar_test(X: Process, rng: np.random.Generator, trials: int = 2, tol: float | None = None) -> MgCharResult:
    """Martingale test through stopping: <Omega, X_T Omega> must equal <Omega, X_0 Omega>.

    Scans two-point stopping times T = t_s on P, t on I - P, with P a random
    projection adapted at t_s.  The first failing T is returned as a witness.
    """
    if X.kind is Kind.GENERAL:
        raise ContractError("mgchar_test needs an adapted process")
    grid = X.grid
    tol = grid.eps_exact if tol is None else tol
    base = X[0][0, 0]
    ends = list(range(1, grid.n_cells + 1)) + ([INF] if X.closing is not None else [])
    zero = np.zeros((grid.dim, grid.dim), dtype=complex)
    for s in range(grid.n_cells):
        for t in ends:
            if t != INF and t <= s:
                continue
            projections = [zero] if s == 0 else [random_adapted_projection(grid, s, rng) for _ in range(trials)]
            for P in projections:
                T = two_point_qst(grid, s, t, P)
                gap = abs(stop_process_discrete_vac(X, T)[0, 0] - base)
                if gap > tol:
                    return MgCharResult(False, T, float(gap))
    return MgCharResult(True)


def mint_decompose(Z: np.ndarray, j: int, form: str = "id") -> tuple[np.ndarray, np.ndarray]:
    """Split pi_id(Z)_j into pi_vac(Z)_j and a gauge sum over cells k >= j.

    ``form="id"`` sums a_k^+ pi_id(pi_vac(Z)_j)_k a_k; ``form="vac"`` sums
    a_k^+ pi_vac(pi_id(Z)_j)_k a_k.  Both tails give the same operator.
    """
    n = int(np.log2(Z.shape[0]))
    d = _e_diag(n, j)
    Zv = d[:, None] * Z * d[None, :]
    tail = np.zeros_like(Zv)
    if form == "id":
        for k in range(j, n):
            tail += lower(pi_id(Zv, k), k)
    elif form == "vac":
        Zi = pi_id(Z, j)
        for k in range(j, n):
            dk = _e_diag(n, k)
            tail += lower(dk[:, None] * Zi * dk[None, :], k)
    else:
        raise ValueError(f"unknown form {form!r}")
    return Zv, tail


def idtpint_check(S: QuantumStoppingTime, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """pi_id(E_S)_j and its two gauge-sum expressions (before and after t_j)."""
    grid = S.grid
    ES = time_projection(S)
    terms = [lower(S.cumulative(k) @ pi_id(ES, k), k) for k in range(grid.n_cells)]
    zero = np.zeros((grid.dim, grid.dim), dtype=complex)
    before = np.eye(grid.dim) - sum(terms[:j], zero)
    after = ES + sum(terms[j:], zero)
    return pi_id(ES, j), before, after


# --- finite-variation processes ----------------------------------------------


@dataclass(frozen=True, eq=False)
class FVProcess:
    """Y_j = sum_{k<j} dt H_k, closed at infinity by the full sum."""

    H: Process

    def __post_init__(self):
        if self.H.kind not in (Kind.VACUUM, Kind.IDENTITY):
            raise ContractError("FV integrand must be vacuum- or identity-adapted")

    @property
    def grid(self):
        return self.H.grid

    def values(self) -> list[np.ndarray]:
        vals = [np.zeros((self.grid.dim, self.grid.dim), dtype=complex)]
        for k in range(self.grid.n_cells):
            vals.append(vals[-1] + self.grid.dt * self.H[k])
        return vals

    def at_infinity(self) -> np.ndarray:
        return self.values()[-1]

    def as_process(self) -> Process:
        vals = self.values()
        return Process(self.grid, self.H.kind, tuple(vals), vals[-1])


def stop_fv_vac(Y: FVProcess, S: QuantumStoppingTime) -> np.ndarray:
    """E_S (Y_inf - sum_k dt S([0,t_k]) E_k H_k E_k S([0,t_k])) E_S."""
    grid = Y.grid
    ES = time_projection(S)
    acc = Y.at_infinity().copy()
    for k in range(grid.n_cells):
        d = _e_diag(grid.n_cells, k)
        C = S.cumulative(k)
        acc -= grid.dt * (C @ (d[:, None] * Y.H[k] * d[None, :]) @ C)
    return ES @ acc @ ES


def _time_block(Z: np.ndarray, k: int, discrete: bool) -> np.ndarray:
    """pi_id(Z)_k, or with ``discrete`` the same block with cell k held empty."""
    B = pi_id(Z, k)
    if discrete:
        empty = ((np.arange(Z.shape[0]) >> k) & 1) == 0
        B = B * empty[:, None] * empty[None, :]
    return B


def idfvint_decompose(Y: FVProcess, j: int, discrete: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three terms whose sum is pi_id(Y_j)_j.

    Returns E_j Y_inf E_j, the gauge sum of pi_id(E_j Y_k E_j)_k over k >= j,
    and the time sum of dt pi_id(E_j H_k E_j)_k over k >= j (to be
    subtracted).  On the grid the time block has to keep cell k empty; with
    ``discrete=False`` the literal block is used and the sum is off by O(dt).
    """
    grid = Y.grid
    n = grid.n_cells
    d = _e_diag(n, j)
    vals = Y.values()
    comp = d[:, None] * vals[-1] * d[None, :]
    gauge = np.zeros_like(comp)
    timed = np.zeros_like(comp)
    for k in range(j, n):
        gauge += lower(pi_id(d[:, None] * vals[k] * d[None, :], k), k)
        timed += grid.dt * _time_block(d[:, None] * Y.H[k] * d[None, :], k, discrete)
    return comp, gauge, timed


def stop_fv_id_discrete(Y: FVProcess, T: QuantumStoppingTime, discrete: bool = True) -> np.ndarray:
    """Y stopped at T, identity flavour, through its gauge and time sums."""
    grid = Y.grid
    ET = time_projection(T)
    vals = Y.values()
    out = ET @ vals[-1] @ ET
    for k in range(grid.n_cells):
        C = T.cumulative(k)
        out += lower(C @ pi_id(ET @ vals[k] @ ET, k) @ C, k)
        out -= grid.dt * (C @ _time_block(ET @ Y.H[k] @ ET, k, discrete) @ C)
    return out


def killed_gauge(Y: FVProcess, T: QuantumStoppingTime) -> np.ndarray:
    """E_T sum_k a_k^+ T([0,t_k]) pi_id(E_T)_k Y_k pi_id(E_T)_k T([0,t_k]) a_k."""
    grid = Y.grid
    ET = time_projection(T)
    vals = Y.values()
    acc = np.zeros((grid.dim, grid.dim), dtype=complex)
    for k in range(grid.n_cells):
        C = T.cumulative(k)
        Pk = pi_id(ET, k)
        acc += lower(C @ Pk @ vals[k] @ Pk @ C, k)
    return ET @ acc


# --- semimartingales -----------------------------------------------------------


def stop_semimartingale_vac(X: QSIntegrands, S: QuantumStoppingTime) -> QSIntegrands:
    """Integrands of X stopped at S (vacuum flavour)."""
    if X.kind is not Kind.VACUUM:
        raise ContractError("stop_semimartingale_vac needs a vacuum-kind semimartingale")
    grid = X.grid
    ES = time_projection(S)
    Ns, Ps, Qs, Rs = [], [], [], []
    for k in range(grid.n_cells + 1):
        C = S.cumulative(k)
        U = np.eye(grid.dim) - C
        Ns.append(U @ X.N[k] @ U)
        Ps.append(ES @ X.P[k] @ U)
        Qs.append(U @ X.Q[k] @ ES)
        R = ES @ X.R[k] @ ES
        Rs.append(R - C @ R @ C)
    mk = lambda ops: Process(grid, Kind.VACUUM, tuple(ops))  # noqa: E731
    return QSIntegrands(ES @ X.initial @ ES, mk(Ns), mk(Ps), mk(Qs), mk(Rs))


def stopped_semimartingale_value(X: QSIntegrands, S: QuantumStoppingTime) -> np.ndarray:
    """M_S + Y_S for the martingale part M and time-integral part Y of X."""
    grid = X.grid
    ES = time_projection(S)
    acc = semimartingale_values(X)[-1]
    for k in range(grid.n_cells):
        C = S.cumulative(k)
        acc = acc - grid.dt * (C @ X.R[k] @ C)
    return ES @ acc @ ES


def decompose_semimartingale(X: Process, kind=Kind.VACUUM) -> tuple[Process, Process]:
    """Split an adapted process into a martingale and a time integral.

    The drift at t_k is read off as E_k (X_{k+1} - X_k) E_k / dt; for identity
    kind it is lifted with pi_id.  Returns (M, H) with X = M + sum dt H.
    """
    grid = X.grid
    kind = Kind(kind)
    n = grid.n_cells
    Hs = []
    for k in range(n):
        d = _e_diag(n, k)
        h = d[:, None] * (X[k + 1] - X[k]) * d[None, :] / grid.dt
        Hs.append(h if kind is Kind.VACUUM else pi_id(h, k))
    Hs.append(np.zeros((grid.dim, grid.dim), dtype=complex))
    H = Process(grid, kind, tuple(Hs))
    Y = FVProcess(H).values()
    M = Process(grid, Kind.ADAPTED, tuple(x - y for x, y in zip(X.ops, Y)), None)
    return M, H


def noncomm_defect(Z: np.ndarray, W: np.ndarray, S: QuantumStoppingTime) -> tuple[np.ndarray, np.ndarray]:
    """Z_S W_S - (Z_S W)_S (identity flavour) and the closed form

    -sum_k a_k^+ S([0,t_k]) pi_id(Z_S)_k S((t_k,inf]) pi_id(W_S)_k S([0,t_k]) a_k,

    with Z_S = E_S Z E_S inside pi_id.  The closed form assumes
    pi_id(A B)_k = pi_id(A)_k pi_id(B)_k, which fails for operators that are
    not adapted at t_k; ``noncomm_defect_grid`` gives the exact sum.
    """
    Zh, Wh = stop_op_id(Z, S), stop_op_id(W, S)
    lhs = Zh @ Wh - stop_op_id(Zh @ W, S)
    Zv, Wv = stop_op_vac(Z, S), stop_op_vac(W, S)
    grid = S.grid
    rhs = np.zeros((grid.dim, grid.dim), dtype=complex)
    for k in range(grid.n_cells):
        C = S.cumulative(k)
        rhs -= lower(C @ pi_id(Zv, k) @ S.upper(k) @ pi_id(Wv, k) @ C, k)
    return lhs, rhs


def noncomm_defect_grid(Z: np.ndarray, W: np.ndarray, S: QuantumStoppingTime) -> np.ndarray:
    """sum_k a_k^+ C_k (pi_id(Z_S)_k C_k pi_id(W_S)_k - pi_id(Z_S W_S)_k) C_k a_k, C_k = S([0,t_k])."""
    Zv, Wv = stop_op_vac(Z, S), stop_op_vac(W, S)
    ZW = Zv @ Wv
    grid = S.grid
    out = np.zeros((grid.dim, grid.dim), dtype=complex)
    for k in range(grid.n_cells):
        C = S.cumulative(k)
        out += lower(C @ (pi_id(Zv, k) @ C @ pi_id(Wv, k) - pi_id(ZW, k)) @ C, k)
    return out


@dataclass
class StoppedAlgebraProbe:
    S: QuantumStoppingTime
    samples: list = field(default_factory=list)
    seed: int = 0


def conditional_expectation_probe(probe: StoppedAlgebraProbe, flavour: str = "vac") -> dict[str, float]:
    """Residuals of the conditional-expectation properties of Z -> Z stopped at S.

    Keys: idempotence, bimodule, positivity (most negative eigenvalue, clipped
    at 0), vacuum.  Any nonzero bimodule residual of the identity flavour is
    reported as found.
    """
    stop = {"vac": stop_op_vac, "id": stop_op_id}[flavour]
    S = probe.S
    out = {"idempotence": 0.0, "bimodule": 0.0, "positivity": 0.0, "vacuum": 0.0}
    samples = list(probe.samples)
    for i, Z in enumerate(samples):
        W = samples[(i + 1) % len(samples)]
        V = samples[(i + 2) % len(samples)]
        Zs, Vs = stop(Z, S), stop(V, S)
        out["idempotence"] = max(out["idempotence"], float(np.linalg.norm(stop(Zs, S) - Zs)))
        out["bimodule"] = max(out["bimodule"], float(np.linalg.norm(stop(Zs @ W @ Vs, S) - Zs @ stop(W, S) @ Vs)))
        P = stop(Z.conj().T @ Z, S)
        low = float(np.linalg.eigvalsh((P + P.conj().T) / 2).min())
        out["positivity"] = max(out["positivity"], max(0.0, -low))
        out["vacuum"] = max(out["vacuum"], float(abs(Zs[0, 0] - Z[0, 0])))
    return out
