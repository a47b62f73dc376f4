"""Random objects shared by the identity suites."""

from __future__ import annotations

import numpy as np

from ..fock import (
    Grid,
    e_projection,
    pi_id,
    pi_vac,
    random_identity_adapted,
    random_operator,
    random_vacuum_adapted,
)
from ..integrals import Kind, Process, QSIntegrands
from ..stopping import QuantumStoppingTime, qst_join, qst_meet, random_classical_qst, random_qst


def adapted_process(grid: Grid, rng: np.random.Generator, kind="adapted", closing: bool = False) -> Process:
    """Random process of the given kind; ``adapted`` mixes identity- and vacuum-adapted values."""
    kind = Kind(kind)
    n = grid.n_cells
    if kind is Kind.VACUUM:
        ops = [random_vacuum_adapted(grid, j, rng) for j in range(n + 1)]
    elif kind is Kind.IDENTITY:
        ops = [random_identity_adapted(grid, j, rng) for j in range(n + 1)]
    else:
        ops = [
            random_identity_adapted(grid, j, rng) if rng.random() < 0.5 else random_vacuum_adapted(grid, j, rng)
            for j in range(n + 1)
        ]
    Z = random_operator(grid.dim, rng) if closing else None
    return Process(grid, kind, tuple(ops), Z)


def closed_martingale(grid: Grid, Z: np.ndarray, kind="identity") -> Process:
    """t_j -> pi(Z)_j closed by Z, with pi the vacuum or identity compression."""
    kind = Kind(kind)
    pi = pi_vac if kind is Kind.VACUUM else pi_id
    return Process.from_function(grid, kind, lambda j: pi(Z, j), Z)


def quadruple(grid: Grid, rng: np.random.Generator, kind="vacuum", martingale: bool = False) -> QSIntegrands:
    kind = Kind(kind)
    init = rng.standard_normal() + 1j * rng.standard_normal()
    initial = init * (e_projection(grid, 0) if kind is Kind.VACUUM else np.eye(grid.dim))
    procs = [adapted_process(grid, rng, kind) for _ in range(3)]
    R = Process.zero(grid, kind) if martingale else adapted_process(grid, rng, kind)
    return QSIntegrands(initial, procs[0], procs[1], procs[2], R)


def stopping_time(grid: Grid, rng: np.random.Generator) -> QuantumStoppingTime:
    """Mostly non-commutative random stopping times, a quarter of them diagonal."""
    if rng.random() < 0.25:
        return random_classical_qst(grid, rng)
    return random_qst(grid, rng)


def ordered_pair(grid: Grid, rng: np.random.Generator) -> tuple[QuantumStoppingTime, QuantumStoppingTime]:
    """(S, T) with S <= T, built through the lattice operations."""
    A, B = stopping_time(grid, rng), stopping_time(grid, rng)
    if rng.random() < 0.5:
        return qst_meet(A, B), B
    return A, qst_join(A, B)


def state_vector(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal(grid.dim) + 1j * rng.standard_normal(grid.dim)
    return x / np.linalg.norm(x)
