"""CSV, markdown and JSON reports over the shared row schema."""

from __future__ import annotations

import csv
import io
import json
import math
from itertools import groupby
from pathlib import Path

from ..errors import ReportError
from .convergence import ConvergenceRow

HEADER = ["identity", "n_cells", "dt", "residual_fro", "residual_op", "ratio"]


def _num(x: float | None) -> str:
    if x is None:
        return ""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def _parse(s: str) -> float | None:
    return None if s == "" else float(s)


def to_csv(rows: list[ConvergenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([r.identity, r.n_cells, _num(r.dt), _num(r.residual_fro), _num(r.residual_op), _num(r.ratio)])
    return buf.getvalue()


def from_csv(text: str) -> list[ConvergenceRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != HEADER:
        raise ValueError("unexpected CSV header")
    return [
        ConvergenceRow(a, int(b), float(c), float(d), float(e), _parse(f))
        for a, b, c, d, e, f in reader
    ]


def to_json(rows: list[ConvergenceRow]) -> str:
    data = [
        {
            "identity": r.identity,
            "n_cells": r.n_cells,
            "dt": r.dt,
            "residual_fro": r.residual_fro,
            "residual_op": r.residual_op,
            "ratio": r.ratio if r.ratio is None or math.isfinite(r.ratio) else _num(r.ratio),
        }
        for r in rows
    ]
    return json.dumps(data, indent=1) + "\n"


def from_json(text: str) -> list[ConvergenceRow]:
    out = []
    for d in json.loads(text):
        ratio = d["ratio"]
        if isinstance(ratio, str):
            ratio = float(ratio)
        out.append(ConvergenceRow(d["identity"], d["n_cells"], d["dt"], d["residual_fro"], d["residual_op"], ratio))
    return out


def to_markdown(rows: list[ConvergenceRow], module_of, verdicts: dict | None = None) -> str:
    """One table per module, modules and rows in first-seen order."""
    verdicts = verdicts or {}
    order: dict[str, list[ConvergenceRow]] = {}
    for r in rows:
        order.setdefault(module_of(r.identity), []).append(r)
    lines = []
    for module, group in order.items():
        lines.append(f"## {module}")
        lines.append("")
        lines.append("| identity | n_cells | dt | residual_fro | residual_op | ratio | verdict |")
        lines.append("|---|---|---|---|---|---|---|")
        for name, rs in groupby(group, key=lambda r: r.identity):
            rs = list(rs)
            for i, r in enumerate(rs):
                v = verdicts.get(name, "") if i == len(rs) - 1 else ""
                ratio = "" if r.ratio is None else (_num(r.ratio) if not math.isfinite(r.ratio) else f"{r.ratio:.3f}")
                lines.append(
                    f"| {r.identity} | {r.n_cells} | {r.dt:.6g} | {r.residual_fro:.3e} | {r.residual_op:.3e} | {ratio} | {v} |"
                )
        lines.append("")
    return "\n".join(lines)


def emit_report(rows: list[ConvergenceRow], fmt: str, path, module_of=None, verdicts=None) -> Path:
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows)
    elif fmt == "md":
        from .runner import module_of as default_module

        text = to_markdown(rows, module_of or default_module, verdicts)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path
