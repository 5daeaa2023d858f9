"""Per-slice statistics of a synthesis run, as a table and a figure."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Tuple

from .synthesis import SynthesisResult

COLUMNS = ["time", "states", "bdd_nodes", "conditions", "realized_observations"]


def slice_rows(result: SynthesisResult) -> List[Tuple[int, int, int, int, int]]:
    rows = []
    for t, (size, nodes) in enumerate(zip(result.slice_sizes, result.slice_nodes)):
        conds = [c for v, c in result.conditions.items() if v.time == t]
        rows.append((t, size, nodes, len(conds), sum(c.care_count for c in conds)))
    return rows


def write_tsv(result: SynthesisResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(slice_rows(result))


def write_figure(result: SynthesisResult, path: Path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = slice_rows(result)
    ts = [r[0] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(ts, [r[1] for r in rows], marker="o")
    ax1.set_xlabel("time")
    ax1.set_ylabel("reachable states")
    ax2.plot(ts, [r[2] for r in rows], marker="s", color="tab:orange")
    ax2.set_xlabel("time")
    ax2.set_ylabel("BDD nodes")
    for ax in (ax1, ax2):
        ax.set_xticks(ts)
        ax.grid(alpha=0.3)
    fig.suptitle(title or f"slices ({result.view.value} view)")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def write_report(result: SynthesisResult, directory: Path, title: str = "") -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tsv, png = directory / "slices.tsv", directory / "slices.png"
    write_tsv(result, tsv)
    write_figure(result, png, title)
    return tsv, png
