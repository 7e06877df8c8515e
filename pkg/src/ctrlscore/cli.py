"""Command-line front end: score, batch, rank, correlate, diagnose.

Exit codes: 0 success, 1 I/O or parse failure, 2 non-convergence,
3 infeasibility, 4 schema or alignment violation.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    CtrlScoreError,
    InfeasibleAllocationError,
    ParseError,
    SchemaError,
    StagnationError,
)
from .genericity import assumption1_check, small_T_limit_check
from .gramian import DynamicsMatrix, matrix_exp, node_gramians
from .network_io import (
    CorrelationReport,
    load_connectivity,
    laplacian_dynamics,
    load_task_spec,
    read_score_csv,
    write_report,
    write_score_csv,
)
from .solver import SolverOptions, solve
from .task_weighting import build_weight

EXIT_OK = 0
EXIT_IO = 1
EXIT_NONCONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_SCHEMA = 4

_fmt = "{:.17g}".format


def _load_dynamics(matrix_path, raw_a: bool, laplacian: str, fmt: str):
    """Returns (DynamicsMatrix, labels)."""
    C = load_connectivity(matrix_path, fmt) if not raw_a else None
    if raw_a:
        # raw mode reuses the grid parser but skips the non-negativity check
        import csv as _csv

        rows = []
        delim = "," if fmt == "csv_dense" else "\t"
        with open(matrix_path, newline="") as fh:
            for row in _csv.reader(fh, delimiter=delim):
                if row and any(c.strip() for c in row):
                    rows.append([c.strip() for c in row])
        if not rows:
            raise ParseError(f"{matrix_path}: empty file")
        labels = None
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            labels = rows[0]
            rows = rows[1:]
        try:
            A = np.array([[float(c) for c in row] for row in rows])
        except ValueError as exc:
            raise ParseError(f"{matrix_path}: {exc}") from exc
        return DynamicsMatrix(entries=A), labels
    return laplacian_dynamics(C, orientation=laplacian), C.labels


def _score_pipeline(matrix_path, task_path, raw_a, laplacian, fmt, opts):
    A, labels = _load_dynamics(matrix_path, raw_a, laplacian, fmt)
    spec = load_task_spec(task_path)
    if spec.n != A.n:
        raise SchemaError(
            f"task spec has n={spec.n} but matrix {matrix_path} has n={A.n}"
        )
    Phi = matrix_exp(A.entries, spec.horizon)
    gs = node_gramians(A, spec.horizon)
    Mw = build_weight(spec, Phi)
    report = solve(gs, Mw, opts)
    return report, labels


def cmd_score(args) -> int:
    opts = SolverOptions(
        max_iters=args.max_iters,
        tol_step=args.tol_step,
        tol_gradmap=args.tol_gradmap,
        record_trace=args.trace,
    )
    report, labels = _score_pipeline(
        args.matrix, args.task, args.raw_A, args.laplacian, args.matrix_format, opts
    )
    if args.out:
        write_report(report, args.out, fmt=args.format, labels=labels)
    else:
        for i, val in enumerate(report.score.p):
            print(f"{i + 1},{labels[i] if labels else ''},{_fmt(val)}")
    print(
        f"objective={_fmt(report.objective_value)} iterations={report.iterations} "
        f"converged={report.converged}",
        file=sys.stderr,
    )
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def _batch_worker(job):
    """Runs one subject; returns (subject, scores-list | None, error | None)."""
    matrix_path, task_path, raw_a, laplacian, fmt, opts_dict = job
    try:
        opts = SolverOptions(**opts_dict)
        report, labels = _score_pipeline(
            matrix_path, task_path, raw_a, laplacian, fmt, opts
        )
        if not report.converged:
            return (Path(matrix_path).stem, None, "did not converge")
        return (Path(matrix_path).stem, (report.score.p.tolist(), labels), None)
    except CtrlScoreError as exc:
        return (Path(matrix_path).stem, None, str(exc))


def cmd_batch(args) -> int:
    matrix_dir = Path(args.matrix_dir)
    files = sorted(
        f for f in matrix_dir.iterdir()
        if f.suffix.lower() in (".csv", ".tsv") and f.is_file()
    )
    if not files:
        raise ParseError(f"no subject files in {matrix_dir}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    opts_dict = dict(
        max_iters=args.max_iters,
        tol_step=args.tol_step,
        tol_gradmap=args.tol_gradmap,
    )
    jobs = [
        (str(f), args.task, args.raw_A, args.laplacian, args.matrix_format, opts_dict)
        for f in files
    ]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    manifest = {}
    table_rows = []
    labels = None
    for subject, payload, error in results:
        if error is not None:
            manifest[subject] = {"status": "failed", "error": error}
            continue
        scores, labels = payload
        manifest[subject] = {"status": "ok"}
        table_rows.append((subject, scores))
        from .solver import Allocation

        write_score_csv(
            Allocation(np.array(scores)), out_dir / f"{subject}.scores.csv", labels
        )

    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if table_rows:
        n = len(table_rows[0][1])
        with open(out_dir / "score_table.csv", "w", newline="") as fh:
            fh.write("subject," + ",".join(str(i + 1) for i in range(n)) + "\n")
            for subject, scores in table_rows:
                fh.write(subject + "," + ",".join(_fmt(v) for v in scores) + "\n")

        scores_mat = np.array([s for _, s in table_rows])
        means = scores_mat.mean(axis=0)
        med = np.percentile(scores_mat, 50, axis=0)
        q1 = np.percentile(scores_mat, 25, axis=0)
        q3 = np.percentile(scores_mat, 75, axis=0)
        # mean-rank ordering: rank 1 = largest mean score, ties by node id
        order = sorted(range(n), key=lambda i: (-means[i], i))
        rank = np.empty(n, dtype=int)
        for r, i in enumerate(order, start=1):
            rank[i] = r
        with open(out_dir / "node_summary.csv", "w", newline="") as fh:
            fh.write("node_id,label,mean,median,q1,q3,mean_rank\n")
            for i in range(n):
                lab = labels[i] if labels else ""
                fh.write(
                    f"{i + 1},{lab},{_fmt(means[i])},{_fmt(med[i])},"
                    f"{_fmt(q1[i])},{_fmt(q3[i])},{rank[i]}\n"
                )

    failures = [s for s, v in manifest.items() if v["status"] != "ok"]
    if failures:
        print(f"{len(failures)} subject(s) failed; see manifest.json", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _read_score_table(path):
    """score_table.csv -> (subjects, node_ids, subjects x nodes array)."""
    import csv as _csv

    try:
        with open(path, newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "subject":
                raise ParseError(f"{path}: expected a 'subject,...' header")
            node_ids = [int(h) for h in header[1:]]
            subjects, rows = [], []
            for row in reader:
                if not row:
                    continue
                subjects.append(row[0])
                rows.append([float(v) for v in row[1:]])
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return subjects, node_ids, np.array(rows)


def cmd_rank(args) -> int:
    subjects, node_ids, table = _read_score_table(args.table)
    n = len(node_ids)
    if args.top > n or args.bottom > n:
        raise SchemaError(f"K exceeds node count n={n}")
    means = table.mean(axis=0)
    # descending mean, ties broken by ascending node id
    order_desc = sorted(range(n), key=lambda i: (-means[i], node_ids[i]))
    top = order_desc[: args.top]
    bottom = list(reversed(order_desc))[: args.bottom]  # ascending mean first

    with open(args.out, "w", newline="") as fh:
        fh.write("panel,rank,node_id,label,subject,score\n")
        for panel, members in (("top", top), ("bottom", bottom)):
            for r, i in enumerate(members, start=1):
                for s, subject in enumerate(subjects):
                    fh.write(
                        f"{panel},{r},{node_ids[i]},,{subject},{_fmt(table[s, i])}\n"
                    )
    return EXIT_OK


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson requires two equal-length vectors with m >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise ValueError("correlation undefined for a constant vector")
    return float(np.clip(np.sum(dx * dy) / (sx * sy), -1.0, 1.0))


def _spearman(x: np.ndarray, y: np.ndarray) -> float:
    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        r[order] = np.arange(len(v), dtype=float)
        # average ranks over ties
        for val in np.unique(v):
            mask = v == val
            r[mask] = r[mask].mean()
        return r

    return pearson(ranks(np.asarray(x, float)), ranks(np.asarray(y, float)))


def cmd_correlate(args) -> int:
    dir_a, dir_b = Path(args.a), Path(args.b)
    files_a = sorted(f.name for f in dir_a.glob("*.csv"))
    files_b = sorted(f.name for f in dir_b.glob("*.csv"))
    common_ignore = {"score_table.csv", "node_summary.csv"}
    files_a = [f for f in files_a if f not in common_ignore]
    files_b = [f for f in files_b if f not in common_ignore]
    if files_a != files_b:
        raise SchemaError(
            f"subject sets differ between {dir_a} and {dir_b}: "
            f"{sorted(set(files_a) ^ set(files_b))[:5]}"
        )
    if not files_a:
        raise SchemaError(f"no score files found under {dir_a}")

    corr = _spearman if args.spearman else pearson
    rs = []
    for name in files_a:
        sa, _ = read_score_csv(dir_a / name)
        sb, _ = read_score_csv(dir_b / name)
        if sa.size != sb.size:
            raise SchemaError(f"{name}: node counts differ ({sa.size} vs {sb.size})")
        try:
            rs.append(corr(sa, sb))
        except ValueError as exc:
            raise SchemaError(f"{name}: {exc}") from exc

    rs_arr = np.array(rs)
    report = CorrelationReport(
        name_a=dir_a.name,
        name_b=dir_b.name,
        subjects=[Path(f).stem for f in files_a],
        per_subject_r=[float(r) for r in rs],
        mean_r=float(rs_arr.mean()),
        std_r=float(rs_arr.std(ddof=1)) if rs_arr.size > 1 else 0.0,
    )
    if args.out:
        write_report(report, args.out, fmt="json")
    print(f"mean_r={_fmt(report.mean_r)} std_r={_fmt(report.std_r)}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    A, _ = _load_dynamics(args.matrix, args.raw_A, args.laplacian, args.matrix_format)
    gs = node_gramians(A, args.T)
    report = assumption1_check(gs)
    print(f"det_G={_fmt(report.det_G)}")
    print(f"lambda_min_G={_fmt(report.lambda_min_G)}")
    print(f"assumption1_holds={report.assumption1_holds}")
    if args.small_T_check:
        dev = small_T_limit_check(A, args.T)
        report = type(report)(
            G=report.G,
            det_G=report.det_G,
            lambda_min_G=report.lambda_min_G,
            lambda_max_G=report.lambda_max_G,
            assumption1_holds=report.assumption1_holds,
            small_T_deviation=dev,
        )
        print(f"small_T_deviation={_fmt(dev)}")
    if args.out:
        write_report(report, args.out, fmt="json")
    return EXIT_OK


def _add_matrix_flags(p):
    p.add_argument("--matrix", required=True, help="connectivity (or raw A) file")
    p.add_argument("--raw-A", action="store_true", dest="raw_A",
                   help="treat the matrix file as A directly (skip Laplacian)")
    p.add_argument("--laplacian", choices=("in", "out"), default="out",
                   help="degree convention for L = D - C")
    p.add_argument("--matrix-format", choices=("csv_dense", "tsv_dense"),
                   default="csv_dense")


def _add_solver_flags(p):
    p.add_argument("--tol-step", type=float, default=1e-9)
    p.add_argument("--tol-gradmap", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctrlscore",
        description="Task-dependent node-wise controllability scores for "
        "linear network systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a single network")
    _add_matrix_flags(p)
    _add_solver_flags(p)
    p.add_argument("--task", required=True, help="JSON task specification")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--trace", action="store_true", help="record the solver trace")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch", help="score every subject file in a directory")
    p.add_argument("--matrix-dir", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("CTRLSCORE_JOBS", "1")))
    p.add_argument("--raw-A", action="store_true", dest="raw_A")
    p.add_argument("--laplacian", choices=("in", "out"), default="out")
    p.add_argument("--matrix-format", choices=("csv_dense", "tsv_dense"),
                   default="csv_dense")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("rank", help="top/bottom-K nodes from a score table")
    p.add_argument("--table", required=True, help="score_table.csv from batch")
    p.add_argument("--top", type=int, required=True)
    p.add_argument("--bottom", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("correlate", help="per-subject correlation of two score dirs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.add_argument("--spearman", action="store_true",
                   help="rank correlation instead of Pearson (non-paper extra)")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("diagnose", help="uniqueness diagnostics for one network")
    _add_matrix_flags(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--small-T-check", action="store_true", dest="small_T_check")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleAllocationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StagnationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except CtrlScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
