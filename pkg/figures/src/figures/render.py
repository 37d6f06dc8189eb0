"""Chart construction from experiment CSV files.

Four chart kinds are supported:

* ``trace``          learning curves: cosine distance against training step,
                     one line per (N, seed) group. Groups come from optional
                     ``N``/``seed`` columns or, for per-run files written by
                     the experiment harness, from the ``# schema=... N=..
                     seed=..`` comment line.
* ``block-bars``     paired intra/inter bars with std whiskers, one pair per
                     (N, seed) row of a block-recovery table.
* ``polarity-bars``  grouped bars of mean cosine per category pair, grouped
                     by slice, with std whiskers.
* ``timeseries``     per-slice mean cosine, one line per category pair.

Input files may start with ``#`` comment lines; the first non-comment line
must be the column header. Missing required columns raise SchemaMismatch,
and inputs with no usable rows raise EmptyInput.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DPI = 150
CHART_KINDS = ("trace", "block-bars", "polarity-bars", "timeseries")


class SchemaMismatch(Exception):
    def __init__(self, column: str, path):
        self.column, self.path = column, path
        super().__init__(f"{path}: required column {column!r} is missing")


class EmptyInput(Exception):
    def __init__(self, path):
        self.path = path
        super().__init__(f"{path}: no plottable rows")


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[str, ...]
    kind: str
    out_path: str
    title: str = ""

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}; expected one of {CHART_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        for path in self.inputs:
            if not Path(path).is_file():
                raise FileNotFoundError(f"input file {path} does not exist")


def _read_csv(path):
    """Rows as dicts, plus metadata parsed from leading comment lines."""
    metadata: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        position = fh.tell()
        line = fh.readline()
        while line.startswith("#"):
            for item in line[1:].split():
                if "=" in item:
                    key, value = item.split("=", 1)
                    metadata[key] = value
            position = fh.tell()
            line = fh.readline()
        fh.seek(position)
        reader = csv.DictReader(fh)
        rows = list(reader)
        columns = reader.fieldnames or []
    return rows, columns, metadata


def _require(columns, needed, path):
    for column in needed:
        if column not in columns:
            raise SchemaMismatch(column, path)


def _trace_series(paths):
    """Ordered mapping from series label to (steps, distances)."""
    series: dict[str, tuple[list[float], list[float]]] = {}
    for path in paths:
        rows, columns, metadata = _read_csv(path)
        _require(columns, ("step", "cosine_distance"), path)
        added = 0
        for row in rows:
            value = row.get("cosine_distance", "")
            if value in ("", None):
                continue
            group_n = row.get("N") or metadata.get("N")
            group_seed = row.get("seed") or metadata.get("seed")
            parts = []
            if group_n is not None:
                parts.append(f"N={group_n}")
            if group_seed is not None:
                parts.append(f"seed={group_seed}")
            label = " ".join(parts) if parts else Path(path).stem
            steps, values = series.setdefault(label, ([], []))
            steps.append(float(row["step"]))
            values.append(float(value))
            added += 1
        if added == 0:
            raise EmptyInput(path)
    return series


def _build_trace(ax, paths):
    for label, (steps, values) in _trace_series(paths).items():
        ax.plot(steps, values, label=label)
    ax.set_xlabel("training step")
    ax.set_ylabel("cosine distance")
    ax.legend(fontsize=8)


def _build_block_bars(ax, paths):
    labels, intra, intra_err, inter, inter_err = [], [], [], [], []
    for path in paths:
        rows, columns, _ = _read_csv(path)
        _require(
            columns,
            ("N", "seed", "intra_mean", "intra_std", "inter_mean", "inter_std"),
            path,
        )
        if not rows:
            raise EmptyInput(path)
        for row in rows:
            labels.append(f"N={row['N']} seed={row['seed']}")
            intra.append(float(row["intra_mean"]))
            intra_err.append(float(row["intra_std"]))
            inter.append(float(row["inter_mean"]))
            inter_err.append(float(row["inter_std"]))
    positions = range(len(labels))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], intra, width,
           yerr=intra_err, capsize=3, label="intra-block")
    ax.bar([p + width / 2 for p in positions], inter, width,
           yerr=inter_err, capsize=3, label="inter-block")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("similarity")
    ax.legend(fontsize=8)


def _polarity_rows(paths):
    collected = []
    for path in paths:
        rows, columns, _ = _read_csv(path)
        _require(columns, ("slice", "groupA", "groupB", "mean", "std"), path)
        if not rows:
            raise EmptyInput(path)
        collected.extend(rows)
    return collected


def _build_polarity_bars(ax, paths):
    rows = _polarity_rows(paths)
    slices = sorted({row["slice"] for row in rows})
    pairs = sorted({(row["groupA"], row["groupB"]) for row in rows})
    width = 0.8 / len(pairs)
    for offset, pair in enumerate(pairs):
        means, stds = [], []
        for label in slices:
            match = [r for r in rows
                     if r["slice"] == label and (r["groupA"], r["groupB"]) == pair]
            means.append(float(match[0]["mean"]) if match else 0.0)
            stds.append(float(match[0]["std"]) if match else 0.0)
        positions = [i + offset * width for i in range(len(slices))]
        ax.bar(positions, means, width, yerr=stds, capsize=2,
               label=f"{pair[0]}-{pair[1]}")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(slices))])
    ax.set_xticklabels(slices, fontsize=8)
    ax.set_ylabel("mean cosine similarity")
    ax.legend(fontsize=8)


def _build_timeseries(ax, paths):
    rows = _polarity_rows(paths)
    slices = sorted({row["slice"] for row in rows})
    pairs = sorted({(row["groupA"], row["groupB"]) for row in rows})
    for pair in pairs:
        values = []
        for label in slices:
            match = [r for r in rows
                     if r["slice"] == label and (r["groupA"], r["groupB"]) == pair]
            values.append(float(match[0]["mean"]) if match else float("nan"))
        ax.plot(range(len(slices)), values, marker="o", label=f"{pair[0]}-{pair[1]}")
    ax.set_xticks(range(len(slices)))
    ax.set_xticklabels(slices, fontsize=8)
    ax.set_ylabel("mean cosine similarity")
    ax.legend(fontsize=8)


_BUILDERS = {
    "trace": _build_trace,
    "block-bars": _build_block_bars,
    "polarity-bars": _build_polarity_bars,
    "timeseries": _build_timeseries,
}


def build_figure(spec: FigureSpec):
    """Construct the matplotlib figure without writing it."""
    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        _BUILDERS[spec.kind](ax, spec.inputs)
    except Exception:
        plt.close(fig)
        raise
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Write the chart as a PNG at a fixed 150 dpi; returns the output path."""
    fig = build_figure(spec)
    out_path = Path(spec.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=DPI, format="png")
    plt.close(fig)
    return out_path
