"""Scenario files: one builder, one stopping time, a list of checks.

    {
      "n_cells": 3, "t_max": 1.0, "seed": 7,
      "builder": {"type": "martingale", "kind": "identity"},
      "stopping_time": {"random": true},
      "identities": ["discrete_stop", "stopped_martingale"]
    }

Builders: ``martingale`` (kind vacuum or identity, closing operator random or
read from ``"closing": "file.csv"``), ``fv`` (kind vacuum or identity) and
``semimartingale``.  Stopping times: ``{"random": true}``,
``{"deterministic": j}``, ``{"chaos": level}`` or the JSON stopping-time
format of ``fockstop.io``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import integrals as qi, stopped as sp, stopping as st
from ..errors import ConfigurationError, FockstopError
from ..fock import make_grid, operator_norm, pi_id, pi_vac, random_operator
from ..integrals import Kind, Process
from ..io import read_operator_csv, stopping_time_from_json
from . import samplers as sm


def _martingale_checks(M: Process, T):
    grid = M.grid
    ET = st.time_projection(T)
    Z = M.closing
    out = {}
    out["discrete_stop"] = lambda: [sp.stop_process_discrete_vac(M, T) - ET @ Z @ ET]

    def stopped_martingale():
        Mv, Mi = sp.stop_process_discrete_vac(M, T), sp.stop_process_discrete_id(M, T)
        res = []
        for j in range(grid.n_cells + 1):
            Tj = st.qst_min_const(T, j)
            res.append(pi_vac(Mv, j) - sp.stop_process_discrete_vac(M, Tj))
            res.append(pi_id(Mi, j) - sp.stop_process_discrete_id(M, Tj))
        return res

    out["stopped_martingale"] = stopped_martingale
    if M.kind is Kind.IDENTITY:
        out["identity_stop"] = lambda: [sp.stop_process_discrete_id(M, T) - sp.stop_op_id(Z, T)]

    def idempotent():
        Zv, Zh = sp.stop_op_vac(Z, T), sp.stop_op_id(Z, T)
        return [sp.stop_op_vac(Zh, T) - Zv, sp.stop_op_id(Zv, T) - Zh, sp.stop_op_id(Zh, T) - Zh, ET @ Zh - Zv]

    out["idempotent"] = idempotent
    out["norm_bound"] = lambda: [max(0.0, operator_norm(sp.stop_op_id(Z, T)) - operator_norm(Z) - 1e-8)]
    return out


def _fv_checks(Y, T):
    return {
        "fv_stop_vacuum": lambda: [sp.stop_fv_vac(Y, T) - sp.stop_process_discrete_vac(Y.as_process(), T)],
        "fv_stop_identity": lambda: [sp.stop_fv_id_discrete(Y, T) - sp.stop_process_discrete_id(Y.as_process(), T)],
        "killed_gauge": lambda: [sp.killed_gauge(Y, T)],
    }


def _semimartingale_checks(X, T):
    def stopped():
        value = sp.stopped_semimartingale_value(X, T)
        return [
            qi.semimartingale_values(sp.stop_semimartingale_vac(X, T))[-1] - value,
            value - sp.stop_process_discrete_vac(qi.semimartingale_process(X), T),
        ]

    return {"stopped_semimartingale": stopped}


def _stopping_time(spec, grid, rng, base):
    if not isinstance(spec, dict):
        raise ConfigurationError("stopping_time must be an object")
    if spec.get("random"):
        return sm.stopping_time(grid, rng)
    if "deterministic" in spec:
        return st.deterministic(grid, spec["deterministic"])
    if "chaos" in spec:
        return st.chaos_qst(grid, int(spec["chaos"]))
    return stopping_time_from_json(spec, grid, base)


def run_scenario(path) -> list[tuple[str, float, bool]]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    try:
        grid = make_grid(int(data.get("n_cells", 3)), float(data.get("t_max", 1.0)))
        rng = np.random.default_rng(int(data.get("seed", 0)))
        builder = data["builder"]
        btype = builder["type"]
        T = _stopping_time(data.get("stopping_time", {"random": True}), grid, rng, path.parent)
        kind = builder.get("kind", "identity")
        if btype == "martingale":
            Z = read_operator_csv(path.parent / builder["closing"]) if "closing" in builder else random_operator(grid.dim, rng)
            checks = _martingale_checks(sm.closed_martingale(grid, Z, kind), T)
        elif btype == "fv":
            checks = _fv_checks(sp.FVProcess(sm.adapted_process(grid, rng, kind)), T)
        elif btype == "semimartingale":
            checks = _semimartingale_checks(sm.quadruple(grid, rng, "vacuum"), T)
        else:
            raise ConfigurationError(f"unknown builder {btype!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FockstopError):
            raise
        raise ConfigurationError(f"bad scenario {path}: {exc!r}") from exc
    names = data.get("identities") or list(checks)
    unknown = [n for n in names if n not in checks]
    if unknown:
        raise ConfigurationError(f"unknown checks {unknown}; this builder offers {list(checks)}")
    tol = grid.eps_exact
    out = []
    for name in names:
        worst = 0.0
        for r in checks[name]():
            worst = max(worst, float(np.linalg.norm(r)) if isinstance(r, np.ndarray) else abs(float(r)))
        out.append((name, worst, worst <= tol))
    return out
