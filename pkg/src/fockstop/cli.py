"""Command line: fockstop suite | converge | demo | scenario | list.

Exit codes: 0 when everything passes, 1 when an identity fails or a report
cannot be written, 2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .errors import FockstopError, ReportError
from .lab import convergence as cv
from .lab.config import load_config
from .lab.exact import REGISTRY
from .lab.report import emit_report
from .lab.runner import module_of, run_convergence, run_suite, suite_rows

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _ids(text):
    return None if text is None else [s.strip() for s in text.split(",") if s.strip()]


def _write_reports(rows, out, stem, formats, verdicts=None):
    if out is None:
        return
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create {out}: {exc}") from exc
    for fmt in formats:
        emit_report(rows, fmt, out / f"{stem}.{fmt}", module_of, verdicts)


def _common(p):
    p.add_argument("--config", help="JSON file with LabConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="directory for the report files")
    p.add_argument("--formats", default="csv,md,json", help="comma-separated subset of csv,md,json")


def cmd_suite(args) -> int:
    config = load_config(args.config, seed=args.seed, n_cells=args.cells,
                         cases_per_identity=args.cases, tol_exact=args.tol, workers=args.workers)
    start = time.perf_counter()
    results = run_suite(config, _ids(args.ids))
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag} {r.module:18s} {r.identity:32s} max residual {r.residual_fro:.3e} (tol {r.tol:.1e})")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} identities pass, "
          f"{config.cases_per_identity} cases each, n_cells={config.n_cells}, "
          f"seed={config.seed}, {time.perf_counter() - start:.1f}s")
    verdicts = {r.identity: "pass" if r.passed else "FAIL" for r in results}
    _write_reports(suite_rows(results), args.out, "suite", _ids(args.formats), verdicts)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_converge(args) -> int:
    config = load_config(args.config, seed=args.seed, refinement_levels=args.levels,
                         converge_base_cells=args.base, workers=args.workers)
    rows, verdicts = run_convergence(config, _ids(args.ids))
    for row in rows:
        ratio = "" if row.ratio is None else f"{row.ratio:.3f}"
        print(f"{row.identity:28s} n={row.n_cells:2d} dt={row.dt:.4g} residual={row.residual_op:.3e} ratio={ratio}")
    bad = 0
    for v in verdicts:
        flag = {True: "PASS", False: "FAIL", None: "INFO"}[v.passed]
        bad += v.passed is False
        print(f"{flag} {v.identity}: {v.status}")
    _write_reports(rows, args.out, "converge", _ids(args.formats), {v.identity: v.status for v in verdicts})
    return EXIT_FAIL if bad else EXIT_OK


def worked_example():
    """The 2-cell stopping time that stops at t_1 when cell 0 is occupied, never otherwise."""
    from .fock import cell_op, make_grid
    from .stopping import INF, qst_new

    grid = make_grid(2, 1.0)
    n0 = cell_op(grid, 0, "number")
    return grid, qst_new(grid, {1: n0, INF: np.eye(4) - n0})


def cmd_demo(args) -> int:
    from .stopping import time_projection, time_projection_integral

    grid, S = worked_example()
    np.set_printoptions(precision=3, suppress=True)
    print("grid: 2 cells, dt = 0.5; basis masks 00, 01, 10, 11 (bit k = cell k)")
    print("S stops at t_1 on n_0 (cell 0 occupied) and at infinity on I - n_0")
    routes = {
        "sum of S({t}) E_t": time_projection(S),
        "I - gauge integral of S([0,t_k]) E_k": time_projection_integral(S, "complement"),
        "E_0 + gauge integral of S((t_k,inf]) E_k": time_projection_integral(S, "vacuum"),
    }
    target = np.diag([1.0, 1.0, 1.0, 0.0])
    ok = True
    for name, E in routes.items():
        same = np.array_equal(E, target)
        ok &= same
        print(f"E_S via {name}: diag {np.real(np.diag(E))}, off-diagonal zero: "
              f"{not np.any(E - np.diag(np.diag(E)))}, equals diag(1,1,1,0) exactly: {same}")
    rest = np.eye(4) - routes["sum of S({t}) E_t"]
    print(f"I - E_S = |11><11|: {np.array_equal(rest, np.diag([0.0, 0.0, 0.0, 1.0]))}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scenario(args) -> int:
    from .lab.scenario import run_scenario

    results = run_scenario(args.file)
    for name, residual, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: residual {residual:.3e}")
    return EXIT_OK if all(ok for _, _, ok in results) else EXIT_FAIL


def cmd_list(args) -> int:
    print("suite identities:")
    for name, idt in REGISTRY.items():
        print(f"  {name:32s} [{idt.module}] {idt.description}")
    print("convergence items (* = default set):")
    for name, it in cv.ITEMS.items():
        print(f"  {name:28s}{'*' if it.default else ' '} [{it.module}] {it.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockstop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("suite", help="run the exact identity suite")
    _common(p)
    p.add_argument("--cells", type=int)
    p.add_argument("--cases", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--ids", help="comma-separated identity names (default: all)")
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("converge", help="run grid-refinement studies")
    _common(p)
    p.add_argument("--ids", help="comma-separated item names (default: the default set)")
    p.add_argument("--levels", type=int, help="number of grid levels")
    p.add_argument("--base", type=int, help="cells on the coarsest grid")
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("demo", help="print the worked 2-cell example")
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("scenario", help="run the checks named in a scenario JSON file")
    p.add_argument("file")
    p.set_defaults(fn=cmd_scenario)

    p = sub.add_parser("list", help="list identities and convergence items")
    p.set_defaults(fn=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FockstopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
