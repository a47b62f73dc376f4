"""Quantum stopping times on the grid and their time projections.

A stopping time is a projection-valued measure on {t_0, ..., t_n, inf}.  Its
atoms are stored by grid index, with ``INF`` as the key of the atom at infinity.
The cumulative projection S([0, t_j]) must act only on the cells before j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AtomNotProjectionError,
    AtomsNotOrthogonalError,
    InitialAtomError,
    NotAdaptedError,
    ResolutionOfIdentityError,
    ShapeError,
)
from .fock import (
    LATTICE_TOL,
    Grid,
    _e_diag,
    ampliate_past,
    check_operator,
    check_time,
    check_vector,
    clean_projection,
    compress_past,
    adapted_gradient,
    is_identity_adapted,
    is_projection,
    join_projections,
    lower,
    meet_projections,
    pi_id,
    random_hermitian,
)

INF = math.inf


def _times(grid: Grid) -> list:
    return list(range(grid.n_cells + 1)) + [INF]


def _key(grid: Grid, t):
    if t == INF or t == "inf":
        return INF
    if isinstance(t, (int, np.integer)) and not isinstance(t, bool) and 0 <= t <= grid.n_cells:
        return int(t)
    raise ShapeError(f"stopping-time support point {t!r} is not a grid index or 'inf'")


def _ediag(grid: Grid, t) -> np.ndarray:
    if t == INF:
        return np.ones(grid.dim)
    return _e_diag(grid.n_cells, t)


def _times_e(Z: np.ndarray, grid: Grid, t) -> np.ndarray:
    """Z E_t."""
    return Z * _ediag(grid, t)[None, :]


@dataclass(frozen=True, eq=False)
class QuantumStoppingTime:
    grid: Grid
    atoms: dict

    def __post_init__(self):
        grid = self.grid
        atoms = {}
        for t, P in self.atoms.items():
            atoms[_key(grid, t)] = np.asarray(check_operator(grid, P), dtype=complex)
        object.__setattr__(self, "atoms", dict(sorted(atoms.items())))
        _validate(self)

    def atom(self, t) -> np.ndarray:
        t = _key(self.grid, t)
        if t in self.atoms:
            return self.atoms[t]
        return np.zeros((self.grid.dim, self.grid.dim), dtype=complex)

    @property
    def support(self) -> list:
        return [t for t, P in self.atoms.items() if np.linalg.norm(P) > LATTICE_TOL]

    @cached_property
    def _cumulatives(self) -> list[np.ndarray]:
        out, acc = [], np.zeros((self.grid.dim, self.grid.dim), dtype=complex)
        for j in range(self.grid.n_cells + 1):
            acc = acc + self.atom(j)
            out.append(acc)
        return out

    def cumulative(self, t) -> np.ndarray:
        """S([0, t])."""
        t = _key(self.grid, t)
        if t == INF:
            return np.eye(self.grid.dim, dtype=complex)
        return self._cumulatives[t]

    def upper(self, t) -> np.ndarray:
        """S((t, inf])."""
        return np.eye(self.grid.dim) - self.cumulative(t)

    def interval(self, a, b) -> np.ndarray:
        """S((t_a, t_b])."""
        return self.cumulative(b) - self.cumulative(a)


def _validate(S: QuantumStoppingTime) -> None:
    grid = S.grid
    scale = np.sqrt(grid.dim)
    tol = LATTICE_TOL * scale
    for t, P in S.atoms.items():
        if not is_projection(P):
            raise AtomNotProjectionError(f"atom at {t} is not an orthogonal projection")
    items = list(S.atoms.items())
    for i, (s, P) in enumerate(items):
        for t, Q in items[i + 1:]:
            if np.linalg.norm(P @ Q) > tol:
                raise AtomsNotOrthogonalError(f"atoms at {s} and {t} overlap")
    total = sum(S.atoms.values(), np.zeros((grid.dim, grid.dim), dtype=complex))
    if np.linalg.norm(total - np.eye(grid.dim)) > tol:
        raise ResolutionOfIdentityError("atoms do not sum to the identity")
    A0 = S.atom(0)
    if np.linalg.norm(A0) > tol and np.linalg.norm(A0 - np.eye(grid.dim)) > tol:
        raise InitialAtomError("the atom at time 0 must be 0 or I")
    for j in range(grid.n_cells + 1):
        if not is_identity_adapted(S.cumulative(j), j, tol):
            raise NotAdaptedError(f"S([0, t_{j}]) depends on cells at or after {j}")


def qst_new(grid: Grid, atoms: dict) -> QuantumStoppingTime:
    return QuantumStoppingTime(grid, atoms)


def deterministic(grid: Grid, t) -> QuantumStoppingTime:
    return QuantumStoppingTime(grid, {_key(grid, t): np.eye(grid.dim, dtype=complex)})


def from_cumulatives(grid: Grid, cumulatives: list[np.ndarray]) -> QuantumStoppingTime:
    """Rebuild atoms from S([0, t_j]), j = 0..n, snapping each difference to a projection."""
    if len(cumulatives) != grid.n_cells + 1:
        raise ShapeError("need one cumulative projection per grid time")
    atoms, prev = {}, np.zeros((grid.dim, grid.dim), dtype=complex)
    for j, C in enumerate(cumulatives):
        C = clean_projection(C)
        diff = C - prev
        if np.linalg.norm(diff) > LATTICE_TOL:
            atoms[j] = clean_projection(diff)
        prev = prev + atoms.get(j, 0)
    rest = np.eye(grid.dim) - prev
    if np.linalg.norm(rest) > LATTICE_TOL:
        atoms[INF] = clean_projection(rest)
    return QuantumStoppingTime(grid, atoms)


def qst_le(S: QuantumStoppingTime, T: QuantumStoppingTime, tol: float = LATTICE_TOL) -> bool:
    """S <= T: S([0, t]) dominates T([0, t]) at every grid time."""
    for j in range(S.grid.n_cells + 1):
        D = S.cumulative(j) - T.cumulative(j)
        if np.linalg.eigvalsh((D + D.conj().T) / 2).min() < -tol:
            return False
    return True


def qst_min_const(S: QuantumStoppingTime, j: int) -> QuantumStoppingTime:
    """S ^ t_j: atoms before j are kept, all remaining mass sits at j."""
    grid = S.grid
    check_time(grid, j)
    atoms = {t: P for t, P in S.atoms.items() if t < j}
    rest = np.eye(grid.dim) - (S.cumulative(j - 1) if j > 0 else 0)
    atoms[j] = rest
    return QuantumStoppingTime(grid, atoms)


def _lattice_cumulatives(S, T, op) -> list[np.ndarray]:
    grid = S.grid
    out = []
    for j in range(grid.n_cells + 1):
        a = compress_past(S.cumulative(j), j)
        b = compress_past(T.cumulative(j), j)
        out.append(ampliate_past(grid, op(a, b), j))
    return out


def qst_meet(S: QuantumStoppingTime, T: QuantumStoppingTime) -> QuantumStoppingTime:
    """S ^ T, whose cumulative projections are joins."""
    return from_cumulatives(S.grid, _lattice_cumulatives(S, T, join_projections))


def qst_join(S: QuantumStoppingTime, T: QuantumStoppingTime) -> QuantumStoppingTime:
    """S v T, whose cumulative projections are meets."""
    return from_cumulatives(S.grid, _lattice_cumulatives(S, T, meet_projections))


# --- time projections --------------------------------------------------------


def time_projection(S: QuantumStoppingTime) -> np.ndarray:
    """E_S = sum_j S({t_j}) E_{t_j} + S({inf})."""
    out = np.zeros((S.grid.dim, S.grid.dim), dtype=complex)
    for t, P in S.atoms.items():
        out += _times_e(P, S.grid, t)
    return out


def time_projection_coarse(S: QuantumStoppingTime, partition) -> np.ndarray:
    """Riemann-sum approximation of E_S along a partition 0 = p_0 < ... < p_m = n."""
    grid = S.grid
    part = [int(p) for p in partition]
    if part[0] != 0 or part[-1] != grid.n_cells or any(b <= a for a, b in zip(part, part[1:])):
        raise ShapeError("partition must increase strictly from 0 to n_cells")
    out = _times_e(S.cumulative(0), grid, 0)
    for a, b in zip(part, part[1:]):
        out = out + _times_e(S.interval(a, b), grid, b)
    return out + S.upper(grid.n_cells)


def round_up(S: QuantumStoppingTime, partition) -> QuantumStoppingTime:
    """S moved forward to the next partition point; its time projection is the coarse sum."""
    grid = S.grid
    part = [int(p) for p in partition]
    if part[0] != 0 or part[-1] != grid.n_cells or any(b <= a for a, b in zip(part, part[1:])):
        raise ShapeError("partition must increase strictly from 0 to n_cells")
    atoms = {0: S.cumulative(0)}
    for a, b in zip(part, part[1:]):
        atoms[b] = S.interval(a, b)
    atoms[INF] = S.upper(grid.n_cells)
    return QuantumStoppingTime(grid, {t: P for t, P in atoms.items() if np.linalg.norm(P) > LATTICE_TOL})


def time_projection_integral(S: QuantumStoppingTime, form: str = "complement") -> np.ndarray:
    """E_S as a gauge integral.

    ``complement``: I - sum_k a_k^+ S([0,t_k]) E_k a_k.
    ``vacuum``: E_0 + sum_k a_k^+ S((t_k, inf]) E_k a_k.
    """
    grid = S.grid
    acc = np.zeros((grid.dim, grid.dim), dtype=complex)
    if form == "complement":
        for k in range(grid.n_cells):
            acc += lower(_times_e(S.cumulative(k), grid, k), k)
        return np.eye(grid.dim) - acc
    if form == "vacuum":
        for k in range(grid.n_cells):
            acc += lower(_times_e(S.upper(k), grid, k), k)
        return np.diag(_ediag(grid, 0)).astype(complex) + acc
    raise ValueError(f"unknown form {form!r}")


def time_projection_integral_id(S: QuantumStoppingTime) -> np.ndarray:
    """I - sum_k a_k^+ S([0,t_k]) pi_id(E_S)_k a_k."""
    grid = S.grid
    ES = time_projection(S)
    acc = np.zeros((grid.dim, grid.dim), dtype=complex)
    for k in range(grid.n_cells):
        acc += lower(S.cumulative(k) @ pi_id(ES, k), k)
    return np.eye(grid.dim) - acc


def pre_s_space(S: QuantumStoppingTime) -> np.ndarray:
    """Orthonormal basis (as columns) of the range of E_S."""
    w, v = np.linalg.eigh(time_projection(S))
    return v[:, w > 0.5]


def e_s_wedge_const(S: QuantumStoppingTime, j: int) -> np.ndarray:
    """S([0,t_j]) E_S + S((t_j, inf]) E_{t_j}."""
    check_time(S.grid, j)
    return S.cumulative(j) @ time_projection(S) + _times_e(S.upper(j), S.grid, j)


def es_distance_sq(S: QuantumStoppingTime, T: QuantumStoppingTime, x: np.ndarray) -> tuple[float, float]:
    """||(E_S - E_T) x||^2 and sum_k ||(S([0,t_k]) - T([0,t_k])) D_k x||^2."""
    check_vector(S.grid, x)
    lhs = float(np.linalg.norm((time_projection(S) - time_projection(T)) @ x) ** 2)
    rhs = 0.0
    for k in range(S.grid.n_cells):
        d = adapted_gradient(x, k)
        rhs += float(np.linalg.norm((S.cumulative(k) - T.cumulative(k)) @ d) ** 2)
    return lhs, rhs


def es_norm_sq(S: QuantumStoppingTime, x: np.ndarray) -> tuple[float, float]:
    """||E_S x||^2 and |<Omega, x>|^2 + sum_k ||S((t_k, inf]) D_k x||^2."""
    check_vector(S.grid, x)
    lhs = float(np.linalg.norm(time_projection(S) @ x) ** 2)
    rhs = float(abs(x[0]) ** 2)
    for k in range(S.grid.n_cells):
        rhs += float(np.linalg.norm(S.upper(k) @ adapted_gradient(x, k)) ** 2)
    return lhs, rhs


# --- families of stopping times ----------------------------------------------


def _popcount(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([bin(m).count("1") for m in idx])


def chaos_projection(grid: Grid, level: int) -> np.ndarray:
    """Projection onto the span of basis states with at most ``level`` occupied cells."""
    return np.diag((_popcount(grid.n_cells) <= level).astype(float)).astype(complex)


def chaos_qst(grid: Grid, level: int) -> QuantumStoppingTime:
    """S([0,t_j]) is the projection onto states with more than ``level`` quanta before t_j."""
    n = grid.n_cells
    idx = np.arange(grid.dim)
    cums = []
    for j in range(n + 1):
        past = _popcount(n) if j == n else np.array([bin(m & ((1 << j) - 1)).count("1") for m in idx])
        cums.append(np.diag((past > level).astype(float)).astype(complex))
    return from_cumulatives(grid, cums)


def classical_qst(grid: Grid, tau) -> QuantumStoppingTime:
    """Diagonal stopping time from a map mask -> grid index (or INF)."""
    tau = list(tau)
    if len(tau) != grid.dim:
        raise ShapeError("need one stopping index per basis state")
    atoms = {}
    for t in sorted(set(tau)):
        atoms[_key(grid, t)] = np.diag([1.0 if s == t else 0.0 for s in tau]).astype(complex)
    return QuantumStoppingTime(grid, atoms)


def random_classical_qst(grid: Grid, rng: np.random.Generator, rate: float | None = None) -> QuantumStoppingTime:
    """Diagonal stopping time: stop at t_j with probability ``rate`` given the past bits."""
    n = grid.n_cells
    rate = rng.uniform(0.15, 0.5) if rate is None else rate
    decision = {}
    tau = []
    for m in range(grid.dim):
        chosen = INF
        for j in range(1, n + 1):
            key = (j, m & ((1 << j) - 1))
            if key not in decision:
                decision[key] = rng.random() < rate
            if decision[key]:
                chosen = j
                break
        tau.append(chosen)
    return classical_qst(grid, tau)


def random_qst(grid: Grid, rng: np.random.Generator, rate: float | None = None) -> QuantumStoppingTime:
    """Random non-commutative stopping time built as an increasing adapted chain."""
    n = grid.n_cells
    rate = rng.uniform(0.15, 0.5) if rate is None else rate
    if rng.random() < 0.05:
        return deterministic(grid, 0)
    atoms = {}
    prev = np.zeros((1, 1), dtype=complex)
    for j in range(1, n + 1):
        prev = np.kron(np.eye(2), prev)
        dim = 1 << j
        w, v = np.linalg.eigh(np.eye(dim) - prev)
        comp = v[:, w > 0.5]
        r = comp.shape[1]
        q = int(rng.binomial(r, rate)) if r else 0
        if q:
            _, u = np.linalg.eigh(random_hermitian(r, rng))
            basis = comp @ u[:, rng.permutation(r)[:q]]
            new = basis @ basis.conj().T
            atoms[j] = ampliate_past(grid, new, j)
            prev = prev + new
    rest = np.eye(grid.dim) - ampliate_past(grid, prev, n)
    if np.linalg.norm(rest) > LATTICE_TOL:
        atoms[INF] = rest
    return QuantumStoppingTime(grid, atoms)


def two_point_qst(grid: Grid, s: int, t, P: np.ndarray) -> QuantumStoppingTime:
    """Stop at t_s on P and at t on I - P."""
    eye = np.eye(grid.dim, dtype=complex)
    return QuantumStoppingTime(grid, {s: P, t: eye - P})


def cumulative_psd_gap(S: QuantumStoppingTime, T: QuantumStoppingTime) -> float:
    """Most negative eigenvalue of S([0,t]) - T([0,t]) over the grid, clipped at 0."""
    worst = 0.0
    for j in range(S.grid.n_cells + 1):
        D = S.cumulative(j) - T.cumulative(j)
        worst = min(worst, float(np.linalg.eigvalsh((D + D.conj().T) / 2).min()))
    return -worst

