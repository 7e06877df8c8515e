#!/usr/bin/env python3
"""End-to-end brain-network experiment: batch scoring, ranking, correlation,
and the box-plot figure.

Expects a dataset directory with per-subject 90x90 connectivity CSVs (one
file per subject), and optionally `aecs/` and `vcs/` subdirectories holding
externally computed per-subject score CSVs aligned by filename.

Example:
    python scripts/run_brain_experiment.py --dataset /data/connectomes \
        --out results/ --jobs 8
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

from ctrlscore import cli

REST_SET = [23, 24, 35, 36, 65, 66]     # bilateral medial/posterior/angular set
TARGET_SET = [22, 41, 42, 79, 80]       # olfactory/amygdala/Heschl target set


def write_task(path: Path, n: int = 90, T: float = 100.0, scale: float = 0.01):
    path.write_text(
        json.dumps(
            {
                "n": n,
                "T": T,
                "mode": "deterministic_target",
                "index_base": "one",
                "mu0_indices": REST_SET,
                "mu0_value": 1.0,
                "xT_indices": TARGET_SET,
                "xT_value": 1.0,
                "sigma0": {"type": "isotropic", "scale": scale},
            },
            indent=2,
        )
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", required=True, help="per-subject CSV directory")
    parser.add_argument("--out", required=True)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--horizon", type=float, default=100.0)
    parser.add_argument("--sigma0-scale", type=float, default=0.01)
    args = parser.parse_args()

    dataset = Path(args.dataset)
    subj_dir = dataset / "subjects" if (dataset / "subjects").is_dir() else dataset
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    task = out / "brain_task.json"
    write_task(task, T=args.horizon, scale=args.sigma0_scale)

    scores = out / "waecs"
    code = cli.main(
        ["batch", "--matrix-dir", str(subj_dir), "--task", str(task),
         "--out-dir", str(scores), "--jobs", str(args.jobs)]
    )
    if code != 0:
        print("batch scoring failed", file=sys.stderr)
        return code

    rank_csv = out / "rank.csv"
    cli.main(
        ["rank", "--table", str(scores / "score_table.csv"),
         "--top", "5", "--bottom", "5", "--out", str(rank_csv)]
    )

    for name in ("aecs", "vcs"):
        ext = dataset / name
        if ext.is_dir():
            cli.main(
                ["correlate", "--a", str(scores), "--b", str(ext),
                 "--out", str(out / f"corr_{name}.json")]
            )
        else:
            print(f"note: no external {name}/ score directory, skipping correlation")

    renderer = Path(__file__).parent.parent / "figures" / "render_boxplots.py"
    subprocess.run(
        [sys.executable, str(renderer), "--in", str(rank_csv),
         "--out", str(out / "waecs_boxplots.png"), "--dpi", "300"],
        check=True,
    )
    print(f"results in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
