#!/usr/bin/env python3
"""Render two-panel box plots (top-K and bottom-K nodes) from a rank CSV.

Input is the long-format CSV produced by `ctrlscore rank`:
panel,rank,node_id,label,subject,score.  The left panel shows the top-K
nodes in their ranked order, the right panel the bottom-K.  Box statistics
use linear-interpolation quartiles over all subject values (numpy's default
percentile rule, median included), whiskers at 1.5*IQR, and outliers drawn
as individual points.  Both PNG and SVG are written.

Usage: render_boxplots.py --in rank.csv --out fig.png --dpi 300
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class RankCsvError(Exception):
    """Malformed rank CSV; message carries the offending line number."""


@dataclass(frozen=True)
class NodeBox:
    node_id: int
    label: str
    rank: int
    scores: np.ndarray
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outliers: np.ndarray


@dataclass(frozen=True)
class BoxPlotSpec:
    """Everything the renderer draws, computed before any plotting."""

    top: list[NodeBox]
    bottom: list[NodeBox]
    subject_count: int
    title: str


def box_stats(scores: np.ndarray) -> tuple[float, float, float, float, float, np.ndarray]:
    """(median, q1, q3, whisker_lo, whisker_hi, outliers) with 1.5*IQR whiskers."""
    scores = np.asarray(scores, dtype=float)
    q1, med, q3 = np.percentile(scores, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = scores[(scores >= lo_fence) & (scores <= hi_fence)]
    whisker_lo = float(inside.min())
    whisker_hi = float(inside.max())
    outliers = np.sort(scores[(scores < lo_fence) | (scores > hi_fence)])
    return float(med), float(q1), float(q3), whisker_lo, whisker_hi, outliers


def parse_rank_csv(path) -> BoxPlotSpec:
    """Parse the rank CSV into a fully computed plot specification."""
    groups: dict[tuple[str, int, int], dict] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise RankCsvError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["panel", "rank", "node_id", "label", "subject", "score"]:
            raise RankCsvError(f"{path}: line 1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise RankCsvError(f"{path}: line {lineno}: expected 6 fields")
            panel, rank_s, node_s, label, subject, score_s = row
            if panel not in ("top", "bottom"):
                raise RankCsvError(f"{path}: line {lineno}: bad panel {panel!r}")
            try:
                key = (panel, int(rank_s), int(node_s))
                score = float(score_s)
            except ValueError as exc:
                raise RankCsvError(f"{path}: line {lineno}: {exc}") from exc
            g = groups.setdefault(key, {"label": label, "scores": []})
            g["scores"].append(score)

    if not groups:
        raise RankCsvError(f"{path}: no data rows")
    counts = {len(g["scores"]) for g in groups.values()}
    if len(counts) != 1:
        raise RankCsvError(f"{path}: nodes have unequal subject counts {sorted(counts)}")

    panels: dict[str, list[NodeBox]] = {"top": [], "bottom": []}
    for (panel, rank, node_id), g in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        scores = np.array(g["scores"])
        med, q1, q3, wlo, whi, out = box_stats(scores)
        panels[panel].append(
            NodeBox(
                node_id=node_id, label=g["label"], rank=rank, scores=scores,
                median=med, q1=q1, q3=q3, whisker_lo=wlo, whisker_hi=whi,
                outliers=out,
            )
        )
    return BoxPlotSpec(
        top=panels["top"],
        bottom=panels["bottom"],
        subject_count=counts.pop(),
        title="Node score distributions",
    )


def render(spec: BoxPlotSpec, out_path, dpi: int = 300) -> list[Path]:
    """Draw the two panels and save PNG + SVG next to each other."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, boxes, name in ((axes[0], spec.top, "Top"), (axes[1], spec.bottom, "Bottom")):
        if not boxes:
            ax.set_visible(False)
            continue
        data = [b.scores for b in boxes]
        ax.boxplot(data, whis=1.5, showfliers=True)
        ax.set_xticklabels(
            [b.label if b.label else str(b.node_id) for b in boxes]
        )
        ax.set_title(f"{name} {len(boxes)}")
        ax.set_xlabel("node")
        ax.set_ylabel("score")
    fig.suptitle(f"{spec.title} ({spec.subject_count} subjects)")
    fig.tight_layout()

    out_path = Path(out_path)
    png = out_path.with_suffix(".png")
    svg = out_path.with_suffix(".svg")
    fig.savefig(png, dpi=dpi)
    fig.savefig(svg)
    plt.close(fig)
    return [png, svg]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="rank_csv", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--dpi", type=int, default=300)
    args = parser.parse_args(argv)
    try:
        spec = parse_rank_csv(args.rank_csv)
    except RankCsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    written = render(spec, args.out, dpi=args.dpi)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
