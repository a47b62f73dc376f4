"""CSV for operators and vectors ("re,im" pairs, row-major) and JSON for stopping times."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ShapeError
from .fock import Grid
from .stopping import INF, QuantumStoppingTime, qst_new


def write_operator_csv(path, Z: np.ndarray) -> None:
    """One line per matrix row: re,im,re,im,..."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in Z:
            w.writerow([repr(float(v)) for z in row for v in (z.real, z.imag)])


def read_operator_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or any(len(r) % 2 or len(r) != len(rows[0]) for r in rows):
        raise ShapeError(f"{path}: rows must hold the same even number of fields")
    vals = np.array(rows, dtype=float)
    return vals[:, 0::2] + 1j * vals[:, 1::2]


def write_vector_csv(path, x: np.ndarray) -> None:
    """One line per entry: re,im."""
    write_operator_csv(path, np.asarray(x).reshape(-1, 1))


def read_vector_csv(path) -> np.ndarray:
    Z = read_operator_csv(path)
    if Z.shape[1] != 1:
        raise ShapeError(f"{path}: a vector file has exactly two fields per line")
    return Z[:, 0]


def _encode_time(t):
    return "inf" if t == INF else int(t)


def stopping_time_to_json(S: QuantumStoppingTime, directory=None, stem: str = "atom") -> dict:
    """{"n_cells", "t_max", "support", "atoms"}.

    Atoms are inline [[re, im], ...] row lists, or CSV file names when
    ``directory`` is given.
    """
    support = list(S.atoms)
    atoms = []
    for t in support:
        P = S.atoms[t]
        if directory is None:
            atoms.append([[[float(z.real), float(z.imag)] for z in row] for row in P])
        else:
            name = f"{stem}_{_encode_time(t)}.csv"
            write_operator_csv(Path(directory) / name, P)
            atoms.append(name)
    return {
        "n_cells": S.grid.n_cells,
        "t_max": S.grid.t_max,
        "support": [_encode_time(t) for t in support],
        "atoms": atoms,
    }


def stopping_time_from_json(data: dict, grid: Grid, base_dir=None) -> QuantumStoppingTime:
    try:
        support, refs = data["support"], data["atoms"]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError("stopping time JSON needs 'support' and 'atoms'") from exc
    if len(support) != len(refs):
        raise ConfigurationError("'support' and 'atoms' differ in length")
    atoms = {}
    for t, ref in zip(support, refs):
        if isinstance(ref, str):
            P = read_operator_csv(Path(base_dir or ".") / ref)
        else:
            arr = np.asarray(ref, dtype=float)
            P = arr[..., 0] + 1j * arr[..., 1]
        atoms[INF if t in ("inf", None) else int(t)] = P
    return qst_new(grid, atoms)


def save_stopping_time(path, S: QuantumStoppingTime, inline: bool = True) -> None:
    path = Path(path)
    data = stopping_time_to_json(S, None if inline else path.parent, stem=path.stem)
    path.write_text(json.dumps(data, indent=1))


def load_stopping_time(path, grid: Grid) -> QuantumStoppingTime:
    path = Path(path)
    return stopping_time_from_json(json.loads(path.read_text()), grid, path.parent)
