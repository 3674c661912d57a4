"""SVG figures from sweep CSVs: one line per strategy."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from dagsim.harness import CSV_FIELDS  # noqa: E402

# experiment -> [(metric column, x column, x label, y label)]
FIGURES = {
    "exp1": [("throughput_tps", "tx_count", "Number of transactions", "Throughput (tx/s)")],
    "exp2": [
        ("art_all_ms", "tx_count", "Number of transactions", "Avg response time (ms)"),
        ("art_committed_ms", "tx_count", "Number of transactions", "Avg response time, committed (ms)"),
        ("art_aborted_ms", "tx_count", "Number of transactions", "Avg response time, aborted (ms)"),
    ],
    "exp3": [
        ("art_all_ms", "dep_ratio", "Dependency ratio", "Avg response time (ms)"),
        ("art_committed_ms", "dep_ratio", "Dependency ratio", "Avg response time, committed (ms)"),
        ("art_aborted_ms", "dep_ratio", "Dependency ratio", "Avg response time, aborted (ms)"),
    ],
}


class MalformedCsv(ValueError):
    pass


@dataclass
class Figure:
    path: Path
    metric: str
    series: Dict[str, List[Tuple[float, float]]]


def read_rows(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_FIELDS:
            raise MalformedCsv(f"{path}: header does not match the sweep schema")
        rows = list(reader)
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    return rows


def emit_plots(csv_path: Union[str, Path], out_dir: Union[str, Path, None] = None) -> List[Figure]:
    rows = read_rows(csv_path)
    out_dir = Path(out_dir) if out_dir is not None else Path(csv_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    experiments = sorted({r["experiment"] for r in rows})
    figures = []
    plt.rcParams["svg.fonttype"] = "none"  # keep text searchable
    for experiment in experiments:
        subset = [r for r in rows if r["experiment"] == experiment]
        specs = FIGURES.get(experiment, FIGURES["exp1"])
        for metric, x_col, x_label, y_label in specs:
            series: Dict[str, List[Tuple[float, float]]] = {}
            try:
                for r in subset:
                    series.setdefault(r["strategy"], []).append((float(r[x_col]), float(r[metric])))
            except ValueError as exc:
                raise MalformedCsv(f"{csv_path}: {exc}") from None
            fig, ax = plt.subplots(figsize=(6, 4))
            for label, points in series.items():
                points.sort()
                xs = [p[0] for p in points]
                ys = [p[1] for p in points]
                ax.plot(xs, ys, marker="o", label=label)
            ax.set_xlabel(x_label)
            ax.set_ylabel(y_label)
            ax.grid(True, alpha=0.4)
            ax.legend()
            path = out_dir / f"{experiment}_{metric}.svg"
            fig.tight_layout()
            fig.savefig(path, format="svg")
            plt.close(fig)
            figures.append(Figure(path, metric, series))
    return figures
