"""Render the three figure families from simulation CSV outputs.

Input schemas are matched exactly against the producing tool's file formats;
a mismatch is an error that names the offending columns.  Rendering is
deterministic: fixed figure geometry, no timestamps, stable ordering.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

NS_PER_DAY = 86_400 * 10**9

SCHEMAS = {
    "cdf": ["offset_ns", "fraction"],
    "drift": [
        "round", "t_ns", "node", "offset_to_real_ns", "goff_ns",
        "applied_global_ns", "applied_local_ns", "reachable_peers",
    ],
    "scan": ["primary_count", "transitive_count", "seed", "strategy", "k"],
}

FIGURE_KINDS = tuple(SCHEMAS)


class SchemaError(ValueError):
    """Input columns do not match the documented schema."""


class EmptyInputError(ValueError):
    """Input parses but carries no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str  # cdf | drift | scan
    inputs: tuple[str, ...]
    output: str
    title: Optional[str] = None
    logx: bool = False

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("figure needs at least one input CSV")


def read_rows(path: str, kind: str) -> list[dict[str, str]]:
    expected = SCHEMAS[kind]
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected columns {expected}")
        if header != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            parts = []
            if missing:
                parts.append(f"missing columns: {', '.join(missing)}")
            if extra:
                parts.append(f"unexpected columns: {', '.join(extra)}")
            if not parts:
                parts.append(f"column order must be {expected}")
            raise SchemaError(f"{path}: {'; '.join(parts)}")
        rows = [dict(zip(expected, rec)) for rec in reader if rec]
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return rows


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path.  No file is written when
    any input fails validation."""
    datasets = [(Path(p).stem, read_rows(p, spec.kind)) for p in spec.inputs]
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    try:
        if spec.kind == "cdf":
            _draw_cdf(ax, datasets, spec.logx)
        elif spec.kind == "drift":
            _draw_drift(ax, datasets)
        else:
            _draw_scan(ax, datasets)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        fig.savefig(spec.output)
    finally:
        plt.close(fig)
    return spec.output


def _draw_cdf(ax, datasets, logx: bool) -> None:
    for label, rows in datasets:
        offsets = [int(r["offset_ns"]) / 1000.0 for r in rows]  # us
        fractions = [float(r["fraction"]) for r in rows]
        ax.step(offsets, fractions, where="post", label=label)
    ax.set_xlabel("absolute clock offset to real time [µs]")
    ax.set_ylabel("fraction of nodes")
    ax.set_ylim(0.0, 1.02)
    if logx:
        ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
    if len(datasets) > 1:
        ax.legend(loc="lower right", fontsize=8)


def _draw_drift(ax, datasets) -> None:
    for _label, rows in datasets:
        per_node: dict[int, list[tuple[float, float]]] = {}
        for r in rows:
            if int(r["round"]) == -1:  # common-time sample rows
                node = int(r["node"])
                per_node.setdefault(node, []).append(
                    (int(r["t_ns"]) / NS_PER_DAY, int(r["offset_to_real_ns"]) / 1e6)
                )
        if not per_node:
            raise EmptyInputError("trace has no sample rows (round == -1)")
        for node in sorted(per_node):
            series = sorted(per_node[node])
            ax.plot([t for t, _ in series], [o for _, o in series], lw=0.7)
    ax.set_xlabel("time [days]")
    ax.set_ylabel("clock offset to real time [ms]")
    ax.grid(True, alpha=0.3)


def _draw_scan(ax, datasets) -> None:
    for _label, rows in datasets:
        groups: dict[str, list[tuple[int, int]]] = {}
        for r in rows:
            key = f"{r['strategy']} k={r['k']}"
            groups.setdefault(key, []).append(
                (int(r["primary_count"]), int(r["transitive_count"]))
            )
        for key in sorted(groups):
            pts = groups[key]
            ax.scatter(
                [p for p, _ in pts], [t for _, t in pts], s=6, alpha=0.5, label=key
            )
    ax.set_xlabel("primary attacker count")
    ax.set_ylabel("maliciously affected nodes")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left", fontsize=8)
