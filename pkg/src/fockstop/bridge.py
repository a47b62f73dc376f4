"""Classical walks on the grid and their Fock-space pictures.

Outcome masks use the same bit convention as Fock basis states: bit k is the
Bernoulli coordinate of cell k.  Random variables are arrays of values indexed
by outcome; the unitary ``U`` carries a Fock vector x to the weighted values
sqrt(P(w)) X(w), so ``U @ vacuum`` is sqrt(P), the constant function 1.

The chaos basis is a product over cells, so ``U`` is a Kronecker product of
2x2 blocks and can be applied without forming the full matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ContractError, NotAdaptedError, ShapeError
from .fock import Grid, annihilate_vec, check_dense, create_vec, number_vec
from .stopping import INF, QuantumStoppingTime, qst_new


def _cell_unitary(p: float) -> np.ndarray:
    """Rows: outcome 0/1; columns: Fock occupation 0/1."""
    q = 1.0 - p
    return np.array([[math.sqrt(q), -math.sqrt(p)], [math.sqrt(p), math.sqrt(q)]])


def _apply_cells(x: np.ndarray, blocks: list[np.ndarray]) -> np.ndarray:
    n = len(blocks)
    t = np.asarray(x, dtype=complex).reshape((2,) * n)
    # reshape puts the highest bit first
    for k, B in enumerate(blocks):
        t = np.moveaxis(np.tensordot(B, t, axes=([1], [n - 1 - k])), 0, n - 1 - k)
    return t.reshape(-1)


@dataclass(frozen=True, eq=False)
class WalkModel:
    grid: Grid
    flavour: str
    jump_prob: np.ndarray

    @cached_property
    def outcomes(self) -> np.ndarray:
        """Boolean array [mask, cell]."""
        n = self.grid.n_cells
        idx = np.arange(self.grid.dim)
        return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)

    @cached_property
    def prob(self) -> np.ndarray:
        w = self.outcomes
        p = self.jump_prob[None, :]
        return np.prod(np.where(w, p, 1.0 - p), axis=1)

    def _blocks(self, adjoint: bool = False) -> list[np.ndarray]:
        return [_cell_unitary(p).T if adjoint else _cell_unitary(p) for p in self.jump_prob]

    def to_l2(self, x: np.ndarray) -> np.ndarray:
        """U x: Fock vector to weighted outcome values."""
        return _apply_cells(x, self._blocks())

    def to_fock(self, y: np.ndarray) -> np.ndarray:
        """U^+ y."""
        return _apply_cells(y, self._blocks(adjoint=True))

    @cached_property
    def U(self) -> np.ndarray:
        check_dense(self.grid)
        out = np.ones((1, 1))
        for p in self.jump_prob:
            out = np.kron(_cell_unitary(p), out)
        return out

    def weigh(self, X: np.ndarray) -> np.ndarray:
        """Random-variable values to the weighted vector sqrt(P) X."""
        return np.sqrt(self.prob) * np.asarray(X)

    def unweigh(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y) / np.sqrt(self.prob)

    def multiplication(self, X: np.ndarray) -> np.ndarray:
        """The Fock operator U^+ diag(X) U."""
        return self.U.T @ (np.asarray(X)[:, None] * self.U)


def walk_model(grid: Grid, flavour: str = "symmetric") -> WalkModel:
    n = grid.n_cells
    if flavour == "symmetric":
        p = np.full(n, 0.5)
    elif flavour == "poisson":
        if grid.dt >= 1:
            raise ConfigurationError("the counting walk needs dt < 1")
        p = np.full(n, grid.dt)
    else:
        raise ConfigurationError(f"unknown walk flavour {flavour!r}")
    return WalkModel(grid, flavour, p)


@dataclass(frozen=True, eq=False)
class ClassicalStoppingTime:
    """tau[mask] is a grid index 0..n or INF."""

    grid: Grid
    tau: tuple = field()

    def __post_init__(self):
        tau = tuple(INF if (t == INF or t == "inf") else int(t) for t in self.tau)
        if len(tau) != self.grid.dim:
            raise ShapeError("need one value per outcome")
        n = self.grid.n_cells
        if any(t != INF and not 0 <= t <= n for t in tau):
            raise ShapeError("stopping values must lie in 0..n or be inf")
        object.__setattr__(self, "tau", tau)
        arr = np.array([math.inf if t == INF else t for t in tau])
        for j in range(n + 1):
            ind = (arr <= j).reshape(-1, 1 << j)  # rows: future bits, columns: past bits
            if np.any(ind != ind[:1]):
                raise NotAdaptedError(f"{{tau <= t_{j}}} depends on cells at or after {j}")

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([math.inf if t == INF else float(t) for t in self.tau])

    def indicator(self, t) -> np.ndarray:
        return self.values == (math.inf if t == INF else t)

    def le(self, j: int) -> np.ndarray:
        return self.values <= j


def classical_stopping_time(grid: Grid, tau) -> ClassicalStoppingTime:
    return ClassicalStoppingTime(grid, tuple(tau))


def classical_st_to_qst(model: WalkModel, tau: ClassicalStoppingTime) -> QuantumStoppingTime:
    """Atoms U^+ 1{tau = t_j} U."""
    atoms = {}
    for t in sorted(set(tau.tau)):
        atoms[t] = model.multiplication(tau.indicator(t).astype(float))
    return qst_new(model.grid, atoms)


def _past_mean(model: WalkModel, X: np.ndarray, j: int) -> np.ndarray:
    """E[X | first j coordinates], as values."""
    P = model.prob.reshape(-1, 1 << j)
    V = np.asarray(X).reshape(-1, 1 << j)
    mass = P.sum(axis=0)
    mean = (P * V).sum(axis=0) / mass
    return np.broadcast_to(mean, V.shape).reshape(-1)


def conditional_expectation(model: WalkModel, X: np.ndarray, tau: ClassicalStoppingTime) -> np.ndarray:
    """sum_j 1{tau = t_j} E[X | first j coordinates], with tau = inf keeping X."""
    X = np.asarray(X)
    out = np.zeros(model.grid.dim, dtype=np.result_type(X, float))
    for t in sorted(set(tau.tau)):
        ind = tau.indicator(t)
        cond = X if (t == INF or t == model.grid.n_cells) else _past_mean(model, X, t)
        out = np.where(ind, cond, out)
    return out


def conditional_expectation_matrix(model: WalkModel, tau: ClassicalStoppingTime) -> np.ndarray:
    """Matrix of conditioning at tau on weighted vectors, built outcome by outcome."""
    dim = model.grid.dim
    n = model.grid.n_cells
    P = model.prob
    K = np.zeros((dim, dim))
    for w in range(dim):
        t = tau.tau[w]
        j = n if t == INF else t
        mask = (1 << j) - 1
        for v in range(dim):
            if (v & mask) == (w & mask):
                # weight of the future coordinates alone
                pw = P[w] / _past_prob(model, w, j)
                pv = P[v] / _past_prob(model, v, j)
                K[w, v] = math.sqrt(pw * pv)
    return K


def _past_prob(model: WalkModel, w: int, j: int) -> float:
    out = 1.0
    for k in range(j):
        p = model.jump_prob[k]
        out *= p if (w >> k) & 1 else 1.0 - p
    return out


# --- walks and their stopping times -----------------------------------------


def walk_path(model: WalkModel) -> np.ndarray:
    """[mask, j] value of the walk after j cells.

    Symmetric walk: sum of +-1 steps.  Counting walk: number of jumps.
    """
    w = model.outcomes.astype(int)
    steps = 2 * w - 1 if model.flavour == "symmetric" else w
    return np.concatenate([np.zeros((w.shape[0], 1), dtype=int), np.cumsum(steps, axis=1)], axis=1)


def _first_index(hit: np.ndarray) -> list:
    out = []
    for row in hit:
        idx = np.flatnonzero(row)
        out.append(int(idx[0]) if idx.size else INF)
    return out


def first_passage(model: WalkModel, level: int) -> ClassicalStoppingTime:
    """First grid time at which the walk reaches ``level`` (from above or below)."""
    path = walk_path(model)
    hit = path >= level if level >= 0 else path <= level
    return ClassicalStoppingTime(model.grid, tuple(_first_index(hit)))


def jump_time(model: WalkModel, m: int) -> ClassicalStoppingTime:
    """First grid time t_j with at least m jumps in cells < j."""
    if model.flavour != "poisson":
        raise ContractError("jump times need the counting walk")
    return ClassicalStoppingTime(model.grid, tuple(_first_index(walk_path(model) >= m)))


def poisson_sde_check(model: WalkModel, n_jump: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """1{tau_n <= t_j} and sum_{k<j} (1{tau_{n-1} <= t_k} - 1{tau_n <= t_k}) dnu_k, as outcome values."""
    if n_jump < 1:
        raise ContractError("n_jump must be at least 1")
    tn = jump_time(model, n_jump)
    tp = jump_time(model, n_jump - 1)
    w = model.outcomes
    lhs = tn.le(j).astype(float)
    rhs = np.zeros_like(lhs)
    for k in range(j):
        rhs += (tp.le(k).astype(float) - tn.le(k).astype(float)) * w[:, k]
    return lhs, rhs


def poisson_increment_vec(x: np.ndarray, k: int, dt: float) -> np.ndarray:
    """(n_k + sqrt(dt)(a_k + a_k^+) + dt) x."""
    return number_vec(x, k) + math.sqrt(dt) * (annihilate_vec(x, k) + create_vec(x, k)) + dt * x


def poisson_sde_quantum_residual(model: WalkModel, n_jump: int, j: int, x: np.ndarray) -> float:
    """||(T_n([0,t_j]) - sum_k (T_{n-1}([0,t_k]) - T_n([0,t_k])) dN_k) x|| / ||x||.

    The cumulative projections are multiplication operators carried to Fock
    space by U; dN_k is the Fock-space counting increment.  Matrix free.
    """
    dt = model.grid.dt
    tn = jump_time(model, n_jump)
    tp = jump_time(model, n_jump - 1)

    def mult(ind, y):
        return model.to_fock(ind * model.to_l2(y))

    out = mult(tn.le(j).astype(float), x)
    for k in range(j):
        ind = tp.le(k).astype(float) - tn.le(k).astype(float)
        out = out - mult(ind, poisson_increment_vec(x, k, dt))
    return float(np.linalg.norm(out) / np.linalg.norm(x))


def jump_time_law(m: int, dt: float, horizon_cells: int) -> tuple[np.ndarray, float]:
    """P(tau_m = (K+1) dt) for K = 0..horizon_cells-1 under Bernoulli(dt) cells, and the untruncated mass.

    Dynamic programme over the jump count, equivalent to enumerating outcomes.
    """
    if m < 1:
        raise ContractError("m must be at least 1")
    count = np.zeros(m)
    count[0] = 1.0
    law = np.zeros(horizon_cells)
    for K in range(horizon_cells):
        law[K] = count[m - 1] * dt
        nxt = count * (1 - dt)
        nxt[1:] += count[:-1] * dt
        count = nxt
    return law, float(1.0 - law.sum())


def jump_time_moments(m: int, dt: float, tail: float = 1e-12) -> tuple[float, float, float]:
    """Mean and variance of tau_m on a horizon long enough to leave ``tail`` mass; also the leftover mass."""
    cells = max(int(4 * m / dt), 16)
    while True:
        law, rest = jump_time_law(m, dt, cells)
        if rest < tail:
            break
        cells *= 2
    t = dt * np.arange(1, cells + 1)
    mean = float(np.dot(law, t))
    var = float(np.dot(law, (t - mean) ** 2))
    return mean, var, rest
