"""Grid-refinement studies: residuals that should vanish as dt -> 0.

Each item measures one residual on a grid and returns (residual_fro,
residual_op).  ``residual_op`` is the primary number: an operator norm for
operator identities, a probe-vector norm ||D e(f)|| / ||e(f)|| for weak ones,
an absolute gap for scalars.  Items carry an expectation that fixes the
verdict: ``linear`` (O(dt)), ``exact`` (zero at every level), ``moments`` (the
jump-time check) or ``report`` (measured, no verdict).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import bridge, integrals as qi, stopped as sp, stopping as st
from ..fock import Grid, e_projection, exp_vector, pi_id, random_operator
from ..integrals import Kind, Process, QSIntegrands
from . import matfree as mf
from . import samplers as smp

LINEAR_BAND = (1.6, 2.4)
ZERO_FLOOR = 100 * np.finfo(float).eps


@dataclass(frozen=True)
class ConvergentItem:
    name: str
    module: str
    measure: Callable[[Grid], tuple[float, float]]
    expect: str
    description: str
    max_cells: int = 16
    default: bool = True
    scale: float = 1.0  # moments: allowed gap is 3 * dt * scale


ITEMS: dict[str, ConvergentItem] = {}


def item(name, module, expect, description, max_cells=16, default=True, scale=1.0):
    def deco(fn):
        ITEMS[name] = ConvergentItem(name, module, fn, expect, description, max_cells, default, scale)
        return fn

    return deco


def _probe(grid: Grid, f=1.0) -> np.ndarray:
    return exp_vector(grid, np.full(grid.n_cells, f, dtype=complex))


def _weak(D: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    r = float(np.linalg.norm(D @ x) / np.linalg.norm(x))
    return float(np.linalg.norm(D)), r


# --- default items -------------------------------------------------------------


@item("chaos_projection", "stopping-times", "exact", "||E_{S_1} - P_2||_op for the chaos stopping time")
def _chaos(grid):
    d = mf.chaos_time_projection_diag(grid.n_cells, 1) - mf.chaos_projection_diag(grid.n_cells, 2)
    return float(np.linalg.norm(d)), float(np.abs(d).max())


@item("chaos_coherent", "stopping-times", "linear", "<e(f), E_{S_1} e(g)> against sum_{k<=2} <f,g>^k / k!")
def _chaos_coherent(grid):
    n = grid.n_cells
    f, g = 1.0, 0.5 + 0.5j
    x, y = _probe(grid, f), _probe(grid, g)
    val = np.vdot(x, mf.chaos_time_projection_diag(n, 1) * y)
    c = np.conj(f) * g * grid.t_max
    target = sum(c**k / math.factorial(k) for k in range(3))
    gap = float(abs(val - target))
    return gap, gap


@item("ito_identity", "qsc-integrals", "linear", "identity-kind product without grid corrections, on e(1)")
def _ito_identity(grid):
    X = mf.ScalarSemimartingale(grid, 1.0, 0.5, 0.3, -0.2, 0.4)
    Y = mf.ScalarSemimartingale(grid, 0.5, -0.3, 0.2, 0.6, -0.1)
    r = mf.ito_identity_residual(X, Y, _probe(grid), corrected=False)
    return r, r


def _jump_moments(m):
    def measure(grid):
        mean, var, _ = bridge.jump_time_moments(m, grid.dt)
        a, b = abs(mean - m), abs(var - m)
        return float(math.hypot(a, b)), float(max(a, b))

    return measure


for _m in (1, 2, 3):
    item(
        f"poisson_gamma_m{_m}",
        "classical-bridge",
        "moments",
        f"mean and variance of the jump time tau_{_m} against Gamma({_m})",
        scale=_m,
    )(_jump_moments(_m))


@item("exp_inner_limit", "fock-core", "linear", "<e(1), e(1)> against e")
def _exp_limit(grid):
    x = _probe(grid)
    gap = float(abs(np.vdot(x, x) - math.e))
    return gap, gap


@item("poisson_sde_quantum", "classical-bridge", "linear", "counting identity with the Fock-space increments, on e(1)")
def _poisson_quantum(grid):
    model = bridge.walk_model(grid, "poisson")
    r = bridge.poisson_sde_quantum_residual(model, 1, grid.n_cells, _probe(grid))
    return r, r


# --- dense items, not in the default set ---------------------------------------


def _vac_scalar(grid, c):
    return Process.from_function(grid, Kind.VACUUM, lambda k: c * e_projection(grid, k))


@item("ito_identity_grid", "qsc-integrals", "exact", "identity-kind product with grid corrections, on e(1)", default=False)
def _ito_identity_grid(grid):
    X = mf.ScalarSemimartingale(grid, 1.0, 0.5, 0.3, -0.2, 0.4)
    Y = mf.ScalarSemimartingale(grid, 0.5, -0.3, 0.2, 0.6, -0.1)
    r = mf.ito_identity_residual(X, Y, _probe(grid), corrected=True)
    return r, r


@item("switch_literal", "qsc-integrals", "linear", "switched integrands without the grid correction, on e(1)", max_cells=8, default=False)
def _switch_literal(grid):
    X = QSIntegrands(
        0.7 * e_projection(grid, 0),
        _vac_scalar(grid, 0.5), _vac_scalar(grid, 0.3), _vac_scalar(grid, -0.2), _vac_scalar(grid, 0.4),
    )
    Y = qi.switch_representation(X, discrete=False)
    n = grid.n_cells
    D = qi.semimartingale_values(Y)[n] - pi_id(qi.semimartingale_values(X)[n], n)
    return _weak(D, _probe(grid))


def _fv_scalar(grid, h=0.8):
    I = np.eye(grid.dim, dtype=complex)
    return sp.FVProcess(Process.from_function(grid, Kind.IDENTITY, lambda k: h * (1 + grid.dt * k) * I))


@item("fv_identity_split_literal", "stopped-processes", "linear", "FV split with the literal time block, at t = t_max/2, on e(1)", max_cells=8, default=False)
def _idfv_literal(grid):
    Y = _fv_scalar(grid)
    j = grid.n_cells // 2
    comp, gauge, timed = sp.idfvint_decompose(Y, j, discrete=False)
    D = comp + gauge - timed - pi_id(Y.values()[j], j)
    return _weak(D, _probe(grid))


@item("fv_stop_identity_literal", "stopped-processes", "linear", "identity-flavour stopped FV with the literal time block, first-quantum S, on e(1)", max_cells=8, default=False)
def _fvid_literal(grid):
    Y = _fv_scalar(grid)
    T = st.chaos_qst(grid, 0)
    D = sp.stop_fv_id_discrete(Y, T, discrete=False) - sp.stop_process_discrete_id(Y.as_process(), T)
    return _weak(D, _probe(grid))


def _rank_one(grid, f, g):
    return np.outer(exp_vector(grid, f), exp_vector(grid, g).conj())


def _coherent_pair(grid):
    t = grid.times[:-1]
    Z = _rank_one(grid, np.cos(t) + 0.5j, 1 - t)
    W = _rank_one(grid, np.sin(2 * t) + 1, 0.3 + 1j * t)
    return Z, W


@item("noncomm_closed_form", "stopped-processes", "report", "Z_S W_S - (Z_S W)_S against the closed form that assumes pi_id is multiplicative", max_cells=8, default=False)
def _noncomm(grid):
    Z, W = _coherent_pair(grid)
    lhs, rhs = sp.noncomm_defect(Z, W, st.chaos_qst(grid, 0))
    t = grid.times[:-1]
    a, b = exp_vector(grid, 0.5 + 0 * t), exp_vector(grid, 1j * t)
    return float(np.linalg.norm(lhs - rhs, 2)), float(abs(np.vdot(a, (lhs - rhs) @ b)))


@item("restopping_identity", "stopped-processes", "report", "(Z_S)_T - Z_S for S <= T, identity flavour, seeded random pair", max_cells=8, default=False)
def _restopping(grid):
    rng = np.random.default_rng(20)
    S, T = smp.ordered_pair(grid, rng)
    Zs = sp.stop_op_id(random_operator(grid.dim, rng), S)
    D = sp.stop_op_id(Zs, T) - Zs
    return float(np.linalg.norm(D)), float(np.linalg.norm(D, 2))


@item("gauge_norm_identity", "qsc-integrals", "exact", "excess of ||(gauge integral of N) e(f)||^2 over its bound, identity kind", max_cells=8, default=False)
def _gauge_norm_id(grid):
    I = np.eye(grid.dim, dtype=complex)
    N = Process.from_function(grid, Kind.IDENTITY, lambda k: (1 + grid.dt * k) * I)
    lhs, bound = qi.gauge_norm_estimate(N, np.ones(grid.n_cells))
    r = max(0.0, lhs - bound)
    return r, r


def default_names() -> list[str]:
    return [k for k, v in ITEMS.items() if v.default]


def level_cells(it: ConvergentItem, base: int, levels: int) -> list[int]:
    """Cells per level: base, 2 base, ..., lowered for items with a smaller cap."""
    top = base << (levels - 1)
    while top > it.max_cells and base > 1:
        base //= 2
        top = base << (levels - 1)
    return [base << i for i in range(levels)]


@dataclass(frozen=True)
class ConvergenceRow:
    identity: str
    n_cells: int
    dt: float
    residual_fro: float
    residual_op: float
    ratio: float | None


def ratios(values: list[float]) -> list[float | None]:
    out: list[float | None] = [None]
    for a, b in zip(values, values[1:]):
        if b > 0:
            out.append(a / b)
        else:
            out.append(math.inf if a > 0 else math.nan)
    return out


def build_rows(name: str, measured: list[tuple[Grid, tuple[float, float]]]) -> list[ConvergenceRow]:
    ops = [m[1][1] for m in measured]
    return [
        ConvergenceRow(name, g.n_cells, g.dt, fro, op, r)
        for (g, (fro, op)), r in zip(measured, ratios(ops))
    ]


@dataclass(frozen=True)
class Verdict:
    identity: str
    passed: bool | None  # None for report-only items
    status: str
    final_ratio: float | None


def verdict(it: ConvergentItem, rows: list[ConvergenceRow]) -> Verdict:
    vals = [r.residual_op for r in rows]
    final = rows[-1].ratio if len(rows) > 1 else None
    if it.expect == "report":
        return Verdict(it.name, None, "measured", final)
    if all(v <= ZERO_FLOOR for v in vals):
        return Verdict(it.name, True, "exact (promoted)", final)
    if it.expect == "exact":
        return Verdict(it.name, False, "nonzero residual", final)
    monotone = all(b <= a for a, b in zip(vals, vals[1:]))
    in_band = final is not None and LINEAR_BAND[0] <= final <= LINEAR_BAND[1]
    ok = monotone and in_band
    status = "O(dt)" if ok else ("not monotone" if not monotone else "ratio out of band")
    if it.expect == "moments":
        within = all(r.residual_op <= 3 * r.dt * it.scale for r in rows)
        ok = ok and within
        if not within:
            status = "outside 3 dt m"
    return Verdict(it.name, ok, status, final)
