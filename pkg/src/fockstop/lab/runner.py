"""Suite and convergence drivers."""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..fock import make_grid
from . import convergence as cv
from .config import LabConfig
from .exact import REGISTRY, cases_grid


def case_rng(seed: int, name: str, case: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode()), case]))


def _norms(r) -> tuple[float, float]:
    if isinstance(r, np.ndarray):
        if r.ndim == 2:
            return float(np.linalg.norm(r)), float(np.linalg.norm(r, 2))
        v = float(np.linalg.norm(r))
        return v, v
    v = abs(float(r))
    return v, v


@dataclass(frozen=True)
class SuiteResult:
    identity: str
    module: str
    n_cells: int
    dt: float
    cases: int
    residual_fro: float
    residual_op: float
    tol: float
    worst_case: int

    @property
    def passed(self) -> bool:
        return self.residual_fro <= self.tol


def _check_names(names, known, what) -> list[str]:
    if names is None:
        return list(known)
    names = list(names)
    bad = [n for n in names if n not in known]
    if bad:
        raise ConfigurationError(f"unknown {what}: {', '.join(bad)}; known: {', '.join(known)}")
    return names


def run_identity(name: str, config: LabConfig) -> SuiteResult:
    idt = REGISTRY[name]
    grid = cases_grid(idt, make_grid(config.n_cells, config.t_max))
    tol = idt.fixed_tol if idt.fixed_tol is not None else config.tolerance
    worst_fro = worst_op = 0.0
    worst_case = 0
    for case in range(config.cases_per_identity):
        rng = case_rng(config.seed, name, case)
        for r in idt.check(grid, rng):
            fro, op = _norms(r)
            if fro > worst_fro:
                worst_case = case
            worst_fro, worst_op = max(worst_fro, fro), max(worst_op, op)
    return SuiteResult(name, idt.module, grid.n_cells, grid.dt, config.cases_per_identity,
                       worst_fro, worst_op, tol, worst_case)


def _pool_map(fn, names, config):
    if config.workers <= 1 or len(names) <= 1:
        return [fn(n, config) for n in names]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, names, [config] * len(names)))


def run_suite(config: LabConfig, names=None) -> list[SuiteResult]:
    """Every registered identity (or the named ones), in registry order."""
    names = _check_names(names, list(REGISTRY), "identities")
    return _pool_map(run_identity, names, config)


def measure_item(name: str, config: LabConfig) -> list[cv.ConvergenceRow]:
    it = cv.ITEMS[name]
    measured = []
    for n in cv.level_cells(it, config.converge_base_cells, config.refinement_levels):
        grid = make_grid(n, config.t_max)
        measured.append((grid, it.measure(grid)))
    return cv.build_rows(name, measured)


def run_convergence(config: LabConfig, names=None) -> tuple[list[cv.ConvergenceRow], list[cv.Verdict]]:
    names = _check_names(names if names is not None else cv.default_names(), list(cv.ITEMS), "convergence items")
    per_item = _pool_map(measure_item, names, config)
    rows = [r for rs in per_item for r in rs]
    verdicts = [cv.verdict(cv.ITEMS[n], rs) for n, rs in zip(names, per_item)]
    return rows, verdicts


def suite_rows(results: list[SuiteResult]) -> list[cv.ConvergenceRow]:
    """Suite results in the shared row schema; the ratio column stays empty."""
    return [cv.ConvergenceRow(r.identity, r.n_cells, r.dt, r.residual_fro, r.residual_op, None) for r in results]


def module_of(identity: str) -> str:
    if identity in REGISTRY:
        return REGISTRY[identity].module
    if identity in cv.ITEMS:
        return cv.ITEMS[identity].module
    return "other"
