"""Toy Fock space over a uniform time grid.

The interval [0, t_max] is cut into ``n`` cells of width ``dt``.  Cell ``k``
carries a two-level factor, and a basis state is an occupation bitmask in which
bit ``k`` is set when cell ``k`` is occupied.  Vectors and operators are plain
complex numpy arrays of length / side ``2**n``.

At time ``t_j`` the past factor is spanned by the cells ``k < j``.  Because
those are the low bits, the past block of an operator (future cells empty) is
its leading ``2**j x 2**j`` corner and ampliation is ``kron(I_future, X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, InvariantError, LatticeToleranceError, ShapeError

MAX_CELLS = 16
# Dense operators above this size do not fit in memory; vector code may go higher.
DENSE_MAX_CELLS = 12
LATTICE_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    n_cells: int
    t_max: float = 1.0

    @property
    def dt(self) -> float:
        return self.t_max / self.n_cells

    @property
    def dim(self) -> int:
        return 1 << self.n_cells

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_cells + 1)

    @property
    def eps_exact(self) -> float:
        return exact_tolerance(self.dim)


def make_grid(n_cells: int, t_max: float = 1.0) -> Grid:
    if not isinstance(n_cells, (int, np.integer)) or isinstance(n_cells, bool):
        raise ConfigurationError(f"n_cells must be an integer, got {n_cells!r}")
    if not 1 <= n_cells <= MAX_CELLS:
        raise ConfigurationError(f"n_cells must lie in [1, {MAX_CELLS}], got {n_cells}")
    if not np.isfinite(t_max) or t_max <= 0:
        raise ConfigurationError(f"t_max must be positive, got {t_max}")
    return Grid(int(n_cells), float(t_max))


def exact_tolerance(dim: int) -> float:
    return 1e-10 * dim


def check_dense(grid: Grid) -> None:
    if grid.n_cells > DENSE_MAX_CELLS:
        raise ConfigurationError(
            f"dense operators need n_cells <= {DENSE_MAX_CELLS}, got {grid.n_cells}"
        )


def cells_of(arr: np.ndarray) -> int:
    dim = arr.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ShapeError(f"dimension {dim} is not a power of two >= 2")
    if arr.ndim == 2 and arr.shape[1] != dim:
        raise ShapeError(f"operator is not square: {arr.shape}")
    return dim.bit_length() - 1


def check_operator(grid: Grid, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z)
    if Z.shape != (grid.dim, grid.dim):
        raise ShapeError(f"expected a {grid.dim}x{grid.dim} operator, got {Z.shape}")
    return Z


def check_vector(grid: Grid, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (grid.dim,):
        raise ShapeError(f"expected a vector of length {grid.dim}, got {x.shape}")
    return x


def check_cell(grid: Grid, k: int) -> None:
    if not 0 <= k < grid.n_cells:
        raise ShapeError(f"cell index {k} outside [0, {grid.n_cells})")


def check_time(grid: Grid, j: int) -> None:
    if not 0 <= j <= grid.n_cells:
        raise ShapeError(f"time index {j} outside [0, {grid.n_cells}]")


# --- vectors -----------------------------------------------------------------


def exp_vector(grid: Grid, f) -> np.ndarray:
    """Exponential vector of the step function taking value f[k] on cell k."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.n_cells,):
        raise ShapeError(f"f must have {grid.n_cells} samples, got {f.shape}")
    vec = np.ones(1, dtype=complex)
    root = np.sqrt(grid.dt)
    for k in range(grid.n_cells):
        vec = np.kron(np.array([1.0, f[k] * root]), vec)
    return vec


def exp_inner(grid: Grid, f, g) -> complex:
    """Closed form of <e(f), e(g)>."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    return complex(np.prod(1.0 + np.conj(f) * g * grid.dt))


def vacuum(grid: Grid) -> np.ndarray:
    vec = np.zeros(grid.dim, dtype=complex)
    vec[0] = 1.0
    return vec


def inner(x: np.ndarray, y: np.ndarray) -> complex:
    return complex(np.vdot(x, y))


# --- cell operators ----------------------------------------------------------

_SINGLE = {
    "annihilate": np.array([[0, 1], [0, 0]], dtype=complex),
    "create": np.array([[0, 0], [1, 0]], dtype=complex),
    "number": np.array([[0, 0], [0, 1]], dtype=complex),
    "empty": np.array([[1, 0], [0, 0]], dtype=complex),
}


@lru_cache(maxsize=None)
def _cell_op(n: int, k: int, kind: str) -> np.ndarray:
    op = np.kron(np.eye(1 << (n - k - 1)), np.kron(_SINGLE[kind], np.eye(1 << k)))
    op = op.astype(complex)
    op.flags.writeable = False
    return op


def cell_op(grid: Grid, k: int, kind: str) -> np.ndarray:
    """Annihilation, creation or number operator of cell k (dense)."""
    check_dense(grid)
    check_cell(grid, k)
    if kind not in _SINGLE:
        raise ValueError(f"unknown cell operator {kind!r}")
    return _cell_op(grid.n_cells, k, kind)


@lru_cache(maxsize=None)
def _masks_with(n: int, k: int) -> np.ndarray:
    idx = np.arange(1 << n)
    out = idx[(idx >> k) & 1 == 1]
    out.flags.writeable = False
    return out


def lower(X: np.ndarray, k: int) -> np.ndarray:
    """a_k^dagger X a_k, computed by index shuffling."""
    n = cells_of(X)
    on = _masks_with(n, k)
    off = on ^ (1 << k)
    out = np.zeros_like(X, dtype=complex)
    out[np.ix_(on, on)] = X[np.ix_(off, off)]
    return out


def times_annihilate(X: np.ndarray, k: int) -> np.ndarray:
    """X a_k."""
    n = cells_of(X)
    on = _masks_with(n, k)
    out = np.zeros_like(X, dtype=complex)
    out[:, on] = X[:, on ^ (1 << k)]
    return out


def create_times(X: np.ndarray, k: int) -> np.ndarray:
    """a_k^dagger X."""
    n = cells_of(X)
    on = _masks_with(n, k)
    out = np.zeros_like(X, dtype=complex)
    out[on, :] = X[on ^ (1 << k), :]
    return out


def annihilate_vec(x: np.ndarray, k: int) -> np.ndarray:
    """a_k x for a vector (works past the dense budget)."""
    n = cells_of(x)
    on = _masks_with(n, k)
    out = np.zeros_like(x, dtype=complex)
    out[on ^ (1 << k)] = x[on]
    return out


def create_vec(x: np.ndarray, k: int) -> np.ndarray:
    n = cells_of(x)
    on = _masks_with(n, k)
    out = np.zeros_like(x, dtype=complex)
    out[on] = x[on ^ (1 << k)]
    return out


def number_vec(x: np.ndarray, k: int) -> np.ndarray:
    n = cells_of(x)
    on = _masks_with(n, k)
    out = np.zeros_like(x, dtype=complex)
    out[on] = x[on]
    return out


# --- adapted projections -----------------------------------------------------


@lru_cache(maxsize=None)
def _e_diag(n: int, j: int) -> np.ndarray:
    d = (np.arange(1 << n) < (1 << j)).astype(float)
    d.flags.writeable = False
    return d


def e_projection(grid: Grid, j: int) -> np.ndarray:
    """E_j: the identity on cells < j tensored with the vacuum projection on the rest."""
    check_dense(grid)
    check_time(grid, j)
    return np.diag(_e_diag(grid.n_cells, j)).astype(complex)


def e_vec(x: np.ndarray, j: int) -> np.ndarray:
    return x * _e_diag(cells_of(x), j)


def vacuum_state(Z: np.ndarray) -> complex:
    """<Omega, Z Omega>."""
    return complex(Z[0, 0])


def compress_past(Z: np.ndarray, j: int) -> np.ndarray:
    n = cells_of(Z)
    if not 0 <= j <= n:
        raise ShapeError(f"time index {j} outside [0, {n}]")
    return np.array(Z[: 1 << j, : 1 << j], dtype=complex)


def ampliate_past(grid: Grid, X: np.ndarray, j: int) -> np.ndarray:
    """X tensored with the identity on cells >= j."""
    check_time(grid, j)
    X = np.asarray(X)
    if X.shape != (1 << j, 1 << j):
        raise ShapeError(f"past operator at {j} must be {1 << j}x{1 << j}, got {X.shape}")
    return np.kron(np.eye(1 << (grid.n_cells - j)), X).astype(complex)


def pi_vac(Z: np.ndarray, j: int) -> np.ndarray:
    """E_j Z E_j."""
    n = cells_of(Z)
    if not 0 <= j <= n:
        raise ShapeError(f"time index {j} outside [0, {n}]")
    out = np.zeros_like(Z, dtype=complex)
    s = 1 << j
    out[:s, :s] = Z[:s, :s]
    return out


def pi_id(Z: np.ndarray, j: int) -> np.ndarray:
    """The past block of Z at t_j, ampliated by the identity on the future."""
    n = cells_of(Z)
    return np.kron(np.eye(1 << (n - j)), compress_past(Z, j))


def is_vacuum_adapted(Z: np.ndarray, j: int, tol: float | None = None) -> bool:
    tol = exact_tolerance(Z.shape[0]) if tol is None else tol
    return bool(np.linalg.norm(Z - pi_vac(Z, j)) <= tol)


def is_identity_adapted(Z: np.ndarray, j: int, tol: float | None = None) -> bool:
    tol = exact_tolerance(Z.shape[0]) if tol is None else tol
    return bool(np.linalg.norm(Z - pi_id(Z, j)) <= tol)


def gradient(x: np.ndarray, k: int) -> np.ndarray:
    """Discrete full gradient: a_k x."""
    return annihilate_vec(x, k)


def adapted_gradient(x: np.ndarray, k: int) -> np.ndarray:
    """Discrete adapted gradient E_k a_k x."""
    return e_vec(annihilate_vec(x, k), k)


# --- projection lattice ------------------------------------------------------


def operator_norm(Z: np.ndarray) -> float:
    return float(np.linalg.norm(Z, 2)) if Z.size else 0.0


def is_projection(P: np.ndarray, tol: float = LATTICE_TOL) -> bool:
    scale = max(1.0, np.sqrt(P.shape[0]))
    return bool(
        np.linalg.norm(P - P.conj().T) <= tol * scale
        and np.linalg.norm(P @ P - P) <= tol * scale
    )


def check_projection(P: np.ndarray, name: str = "operand") -> None:
    if not is_projection(P):
        raise InvariantError(f"{name} is not an orthogonal projection")


def spectral_projection(H: np.ndarray, lo: float, hi: float = np.inf) -> np.ndarray:
    """Projection onto the eigenspaces of Hermitian H with eigenvalue in [lo, hi]."""
    w, v = np.linalg.eigh((H + H.conj().T) / 2)
    keep = (w >= lo) & (w <= hi)
    v = v[:, keep]
    return v @ v.conj().T


def clean_projection(P: np.ndarray) -> np.ndarray:
    """Nearest projection to an almost-projection."""
    return spectral_projection(P, 0.5)


def meet_projections(P: np.ndarray, Q: np.ndarray, tol: float = LATTICE_TOL) -> np.ndarray:
    """P ^ Q as the eigenvalue-2 eigenspace of P + Q."""
    check_projection(P, "P")
    check_projection(Q, "Q")
    w, v = np.linalg.eigh((P + Q + (P + Q).conj().T) / 2)
    top = w >= 2 - tol
    near = (w >= 2 - 1e3 * tol) & ~top
    if np.any(near):
        raise LatticeToleranceError("eigenvalues of P + Q cluster near 2; meet is ill-resolved")
    v = v[:, top]
    return v @ v.conj().T


def join_projections(P: np.ndarray, Q: np.ndarray, tol: float = LATTICE_TOL) -> np.ndarray:
    eye = np.eye(P.shape[0])
    return eye - meet_projections(eye - P, eye - Q, tol)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_operator(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return a / np.sqrt(2 * dim)


def random_past_projection(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    w, v = np.linalg.eigh(random_hermitian(dim, rng))
    v = v[:, rng.permutation(dim)[:rank]]
    return v @ v.conj().T


def random_adapted_projection(grid: Grid, j: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random projection on the past at t_j, ampliated to the full space."""
    check_time(grid, j)
    return ampliate_past(grid, random_past_projection(1 << j, rng, rank), j)


def random_identity_adapted(grid: Grid, j: int, rng: np.random.Generator) -> np.ndarray:
    return ampliate_past(grid, random_operator(1 << j, rng), j)


def random_vacuum_adapted(grid: Grid, j: int, rng: np.random.Generator) -> np.ndarray:
    return pi_vac(random_operator(grid.dim, rng), j)
