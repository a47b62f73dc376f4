"""Vector-only evaluations used by the convergence lab at up to 16 cells."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..fock import Grid, annihilate_vec, create_vec, number_vec


def popcount_below(n: int, j: int) -> np.ndarray:
    """Number of occupied cells before j, for every basis mask."""
    idx = np.arange(1 << n)
    past = idx & ((1 << j) - 1)
    out = np.zeros(1 << n, dtype=np.int64)
    for k in range(j):
        out += (past >> k) & 1
    return out


def e_diag(n: int, j: int) -> np.ndarray:
    return (np.arange(1 << n) < (1 << j)).astype(float)


def chaos_time_projection_diag(n: int, level: int) -> np.ndarray:
    """Diagonal of E_S for the chaos stopping time S_level, assembled atom by atom."""
    prev = np.zeros(1 << n)
    out = np.zeros(1 << n)
    for j in range(n + 1):
        cum = (popcount_below(n, j) > level).astype(float)
        out += (cum - prev) * e_diag(n, j)
        prev = cum
    return out + (1.0 - prev)


def chaos_projection_diag(n: int, level: int) -> np.ndarray:
    return (popcount_below(n, n) <= level).astype(float)


@dataclass(frozen=True)
class ScalarSemimartingale:
    """Identity-kind X_j = x0 + sum_{k<j} (nu dLambda + alpha dA + beta dA^+ + rho dt) with scalar integrands."""

    grid: Grid
    x0: complex
    nu: complex
    alpha: complex
    beta: complex
    rho: complex

    def apply(self, j: int, w: np.ndarray) -> np.ndarray:
        rt, dt = math.sqrt(self.grid.dt), self.grid.dt
        out = self.x0 * w
        for k in range(j):
            out = out + self.nu * number_vec(w, k) + self.alpha * rt * annihilate_vec(w, k)
            out = out + self.beta * rt * create_vec(w, k) + self.rho * dt * w
        return out


def ito_identity_residual(X: ScalarSemimartingale, Y: ScalarSemimartingale, v: np.ndarray, corrected: bool) -> float:
    """||(X_n Y_n - product integrands evaluated at t_n) v|| / ||v||.

    The product integrands are the continuum identity-adapted ones; with
    ``corrected`` the grid terms of order dt are added as well.
    """
    grid = X.grid
    n, dt, rt = grid.n_cells, grid.dt, math.sqrt(grid.dt)
    lhs = X.apply(n, Y.apply(n, v))
    nu, al, be, rh = X.nu, X.alpha, X.beta, X.rho
    nu2, al2, be2, rh2 = Y.nu, Y.alpha, Y.beta, Y.rho
    cN = nu * nu2 + (dt * (nu * rh2 + rh * nu2 + be * al2 - al * be2) if corrected else 0)
    cP = al * nu2 + (dt * (al * rh2 + rh * al2) if corrected else 0)
    cQ = nu * be2 + (dt * (be * rh2 + rh * be2) if corrected else 0)
    cR = al * be2 + (dt * rh * rh2 if corrected else 0)

    def block(k, w, a, b, c):
        # (a X_k + b Y_k + c) w
        return a * X.apply(k, w) + b * Y.apply(k, w) + c * w

    out = X.x0 * Y.x0 * v
    for k in range(n):
        u = annihilate_vec(v, k)
        out = out + create_vec(block(k, u, nu2, nu, cN), k)
        out = out + rt * block(k, u, al2, al, cP)
        out = out + rt * create_vec(block(k, v, be2, be, cQ), k)
        out = out + dt * block(k, v, rh2, rh, cR)
    return float(np.linalg.norm(lhs - out) / np.linalg.norm(v))
