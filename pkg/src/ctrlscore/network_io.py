"""File ingestion and report serialization.

Connectivity matrices come in as dense CSV/TSV grids (optional header row of
node labels), task specifications as a small JSON schema, and all reports go
out as deterministic JSON or CSV (fixed field order, 17-significant-digit
floats) so batch outputs are byte-stable.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError, SchemaError
from .genericity import DiagnosticsReport
from .gramian import DynamicsMatrix, Provenance
from .solver import Allocation, ScoreReport
from .task_weighting import TaskMode, TaskSpec


@dataclass(frozen=True)
class ConnectivityMatrix:
    entries: np.ndarray
    labels: Optional[list[str]] = None
    one_based_ids: bool = True

    def __post_init__(self):
        E = np.array(self.entries, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise ParseError(f"connectivity matrix must be square, got {E.shape}")
        if not np.all(np.isfinite(E)):
            raise ParseError("connectivity matrix contains non-finite entries")
        if np.any(E < 0):
            bad = np.argwhere(E < 0)
            cells = ", ".join(f"({r + 1},{c + 1})" for r, c in bad[:10])
            raise ParseError(f"negative connectivity entries at cells {cells}")
        if self.labels is not None and len(self.labels) != E.shape[0]:
            raise ParseError(
                f"{len(self.labels)} labels for {E.shape[0]} nodes"
            )
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CorrelationReport:
    name_a: str
    name_b: str
    subjects: list[str]
    per_subject_r: list[float]
    mean_r: float
    std_r: float


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def load_connectivity(path, fmt: str = "csv_dense") -> ConnectivityMatrix:
    """Parse a dense numeric grid; a single leading non-numeric row is labels."""
    if fmt not in ("csv_dense", "tsv_dense"):
        raise ValueError(f"unknown format {fmt!r}")
    delim = "," if fmt == "csv_dense" else "\t"
    rows: list[list[str]] = []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh, delimiter=delim):
                if row and any(cell.strip() for cell in row):
                    rows.append([cell.strip() for cell in row])
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file")

    labels = None
    first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        labels = first
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: header but no data rows")

    n_cols = len(rows[0])
    data = np.empty((len(rows), n_cols))
    for r, row in enumerate(rows):
        if len(row) != n_cols:
            raise ParseError(
                f"{path}: ragged row {r + 1} has {len(row)} cells, expected {n_cols}"
            )
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError as exc:
                raise ParseError(
                    f"{path}: non-numeric cell {cell!r} at row {r + 1}, column {c + 1}"
                ) from exc
    if data.shape[0] != data.shape[1]:
        raise ParseError(f"{path}: matrix is {data.shape[0]}x{data.shape[1]}, not square")
    return ConnectivityMatrix(entries=data, labels=labels)


def laplacian_dynamics(C: ConnectivityMatrix, orientation: str = "out") -> DynamicsMatrix:
    """A = -L with L = D - C.

    orientation="out" uses row sums for D (so A 1 = 0, the default);
    "in" uses column sums for datasets with the transposed convention.
    """
    E = C.entries
    if orientation == "out":
        L = np.diag(E.sum(axis=1)) - E
        return DynamicsMatrix(entries=-L, provenance=Provenance.NEGATIVE_LAPLACIAN)
    if orientation == "in":
        L = np.diag(E.sum(axis=0)) - E
        # column sums vanish instead of row sums, so the row-sum invariant
        # of the negative_laplacian provenance does not apply
        return DynamicsMatrix(entries=-L, provenance=Provenance.RAW)
    raise ValueError(f"orientation must be 'in' or 'out', got {orientation!r}")


def _load_vector_csv(path, n: int) -> np.ndarray:
    v = _load_matrix_csv(path).ravel()
    if v.size != n:
        raise SchemaError(f"{path}: expected {n} entries, got {v.size}")
    return v


def _load_matrix_csv(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return data


def _indices_to_vector(indices, value, n, index_base: str, what: str) -> np.ndarray:
    v = np.zeros(n)
    offset = 1 if index_base == "one" else 0
    for idx in indices:
        j = int(idx) - offset
        if not (0 <= j < n):
            raise SchemaError(
                f"{what}: index {idx} out of range for n={n} ({index_base}-based)"
            )
        v[j] = value
    return v


def load_task_spec(path) -> TaskSpec:
    """Build a TaskSpec from the JSON task schema."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: task spec must be a JSON object")

    try:
        n = int(doc["n"])
        T = float(doc["T"])
        mode = TaskMode(doc["mode"])
    except KeyError as exc:
        raise SchemaError(f"{path}: missing required field {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    index_base = doc.get("index_base", "one")
    if index_base not in ("one", "zero"):
        raise SchemaError(f"{path}: index_base must be 'one' or 'zero'")
    base = Path(path).parent

    try:
        if mode == TaskMode.DETERMINISTIC_TARGET:
            mu0 = _indices_to_vector(
                doc["mu0_indices"], float(doc["mu0_value"]), n, index_base, "mu0"
            )
            xT = _indices_to_vector(
                doc["xT_indices"], float(doc["xT_value"]), n, index_base, "xT"
            )
            s0 = doc["sigma0"]
            if s0.get("type") == "isotropic":
                scale = float(s0["scale"])
                if scale <= 0:
                    raise SchemaError(f"{path}: sigma0 scale must be positive")
                sigma0 = scale * np.eye(n)
            elif s0.get("type") == "dense":
                sigma0 = _load_matrix_csv(base / s0["path"])
            else:
                raise SchemaError(f"{path}: sigma0 type must be 'isotropic' or 'dense'")
            return TaskSpec(
                horizon=T, mode=mode, n=n, mu0=mu0, sigma0=sigma0, xT=xT
            )
        if mode == TaskMode.ISOTROPIC:
            scale = float(doc["scale"])
            if scale <= 0:
                raise SchemaError(f"{path}: scale must be positive")
            return TaskSpec(horizon=T, mode=mode, n=n, iso_scale=scale)
        if mode == TaskMode.SECOND_MOMENT:
            return TaskSpec(
                horizon=T,
                mode=mode,
                n=n,
                mu0=_load_vector_csv(base / doc["mu0_path"], n),
                sigma0=_load_matrix_csv(base / doc["sigma0_path"]),
                muT=_load_vector_csv(base / doc["muT_path"], n),
                sigmaT=_load_matrix_csv(base / doc["sigmaT_path"]),
                cross_cov=_load_matrix_csv(base / doc["cross_cov_path"]),
            )
        if mode == TaskMode.EXPLICIT_M:
            return TaskSpec(
                horizon=T,
                mode=mode,
                n=n,
                M_explicit=_load_matrix_csv(base / doc["M_path"]),
            )
    except KeyError as exc:
        raise SchemaError(f"{path}: missing field {exc} for mode {mode.value}") from exc
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}: unhandled mode {mode}")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Allocation):
        return obj.p.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
        }
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_report(
    report,
    path,
    fmt: str = "json",
    labels: Optional[list[str]] = None,
) -> None:
    """Serialize a report deterministically.

    JSON keeps every field in declaration order; score CSV emits
    node_id,label,score rows ordered by node id.
    """
    path = Path(path)
    if fmt == "json":
        doc = _jsonable(report)
        doc["report_type"] = type(report).__name__
        with open(path, "w", newline="") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False)
            fh.write("\n")
        return
    if fmt == "csv":
        if not isinstance(report, ScoreReport):
            raise ValueError("CSV output is defined for score reports only")
        write_score_csv(report.score, path, labels=labels)
        return
    raise ValueError(f"unknown format {fmt!r}")


def write_score_csv(score: Allocation, path, labels: Optional[list[str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("node_id,label,score\n")
        for i, val in enumerate(score.p):
            label = labels[i] if labels else ""
            fh.write(f"{i + 1},{label},{_fmt(val)}\n")


def read_score_csv(path) -> tuple[np.ndarray, list[str]]:
    """Read a node_id,label,score CSV back as (scores, labels)."""
    scores: list[float] = []
    labels: list[str] = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:1]] != ["node_id"]:
                raise ParseError(f"{path}: expected a node_id,label,score header")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise ParseError(f"{path}: bad row at line {lineno}")
                try:
                    node_id = int(row[0])
                    val = float(row[2])
                except ValueError as exc:
                    raise ParseError(f"{path}: bad value at line {lineno}") from exc
                if node_id != len(scores) + 1:
                    raise ParseError(
                        f"{path}: node ids out of order at line {lineno}"
                    )
                labels.append(row[1])
                scores.append(val)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return np.array(scores), labels


def read_score_report(path) -> ScoreReport:
    """Round-trip loader for JSON-serialized score reports."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if doc.get("report_type") != "ScoreReport":
        raise SchemaError(f"{path}: not a score report")
    trace = doc.get("trace")
    return ScoreReport(
        score=Allocation(np.array(doc["score"], dtype=float)),
        objective_value=doc["objective_value"],
        iterations=doc["iterations"],
        converged=doc["converged"],
        gradient_map_norm=doc["gradient_map_norm"],
        lambda_min_final=doc["lambda_min_final"],
        uniqueness_caveat=doc.get("uniqueness_caveat", False),
        warning=doc.get("warning"),
        trace=[tuple(t) for t in trace] if trace is not None else None,
    )
