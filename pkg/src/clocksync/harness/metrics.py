"""Trace parsing and metric computation: accuracy, skew, final-offset CDF,
synchronized fraction, and the free-drift phase boundary.

Accuracy A(t) = max_v |L_v(t) - t| and skew G(t) = max_v,w (L_v - L_w) are
computed exactly (integer ns) at the common-real-time sample rows; G <= 2A
is asserted on every sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

from .. import clockcore as cc
from ..netsim import TRACE_HEADER, Trace, TraceRow

DEFAULT_SYNC_THRESHOLD_NS = 10_000


class TraceFormatError(ValueError):
    pass


def parse_trace_csv(path: str) -> list[TraceRow]:
    rows: list[TraceRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != TRACE_HEADER:
            raise TraceFormatError(f"{path}: bad or missing trace header")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 8:
                raise TraceFormatError(f"{path}:{lineno}: expected 8 columns, got {len(rec)}")
            try:
                rows.append(TraceRow(*(int(x) for x in rec)))
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{lineno}: non-integer field ({exc})")
    return rows


@dataclass
class RunMetrics:
    n: int
    rounds: int
    threshold_ns: int
    sample_t: list[int]
    accuracy_ns: list[int]
    skew_ns: list[int]
    final_abs_offsets: list[int]  # per node, at the last sample time
    fraction_synchronized: float
    max_abs_offset_ns: int  # over every trace row
    max_skew_ns: int
    free_drift_end_ns: Optional[int]  # first nonzero global correction
    max_total_global_corr_ns: int  # max over nodes of sum |applied_global|
    min_reachable_peers: int  # worst per-round peer reachability (-1: no rounds)

    def cdf_points(self) -> list[tuple[int, float]]:
        ordered = sorted(self.final_abs_offsets)
        n = len(ordered)
        return [(off, (i + 1) / n) for i, off in enumerate(ordered)]


def compute_metrics(
    rows: Sequence[TraceRow], threshold_ns: int = DEFAULT_SYNC_THRESHOLD_NS
) -> RunMetrics:
    if not rows:
        raise TraceFormatError("empty trace")
    n = max(r.node for r in rows) + 1

    samples: dict[int, dict[int, int]] = {}
    max_abs = 0
    max_round = 0
    free_drift_end: Optional[int] = None
    total_global = [0] * n
    min_reachable = -1
    for row in rows:
        max_abs = max(max_abs, abs(row.offset_to_real_ns))
        if row.round == -1:
            samples.setdefault(row.t_ns, {})[row.node] = row.offset_to_real_ns
        else:
            max_round = max(max_round, row.round)
            total_global[row.node] += abs(row.applied_global_ns)
            if min_reachable < 0 or row.reachable_peers < min_reachable:
                min_reachable = row.reachable_peers
            if row.applied_global_ns != 0 and (
                free_drift_end is None or row.t_ns < free_drift_end
            ):
                free_drift_end = row.t_ns
    if not samples:
        raise TraceFormatError("trace has no sample rows (round == -1)")

    sample_t = sorted(samples)
    accuracy: list[int] = []
    skew: list[int] = []
    for t in sample_t:
        per_node = samples[t]
        if len(per_node) != n:
            raise TraceFormatError(f"sample at t={t} covers {len(per_node)} of {n} nodes")
        offsets = list(per_node.values())
        acc = max(abs(o) for o in offsets)
        skw = max(offsets) - min(offsets)
        assert skw <= 2 * acc, "skew exceeded twice the accuracy"
        accuracy.append(acc)
        skew.append(skw)

    final = samples[sample_t[-1]]
    final_abs = [abs(final[v]) for v in range(n)]
    synchronized = sum(1 for off in final_abs if off <= threshold_ns) / n

    return RunMetrics(
        n=n,
        rounds=max_round,
        threshold_ns=threshold_ns,
        sample_t=sample_t,
        accuracy_ns=accuracy,
        skew_ns=skew,
        final_abs_offsets=final_abs,
        fraction_synchronized=synchronized,
        max_abs_offset_ns=max_abs,
        max_skew_ns=max(skew),
        free_drift_end_ns=free_drift_end,
        max_total_global_corr_ns=max(total_global),
        min_reachable_peers=min_reachable,
    )


def write_metrics_csv(metrics: RunMetrics, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t_ns,accuracy_ns,skew_ns\n")
        for t, acc, skw in zip(metrics.sample_t, metrics.accuracy_ns, metrics.skew_ns):
            fh.write(f"{t},{acc},{skw}\n")


def write_cdf_csv(metrics: RunMetrics, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("offset_ns,fraction\n")
        for off, frac in metrics.cdf_points():
            fh.write(f"{off},{frac:.6f}\n")


def summary_lines(metrics: RunMetrics, scale_note: Optional[str] = None) -> list[str]:
    lines = []
    if scale_note:
        lines.append(f"# {scale_note}")
    free_day = (
        f"{metrics.free_drift_end_ns / cc.NS_PER_DAY:.4f}"
        if metrics.free_drift_end_ns is not None
        else "-1"
    )
    lines += [
        f"nodes={metrics.n}",
        f"rounds={metrics.rounds}",
        f"sync_threshold_ns={metrics.threshold_ns}",
        f"fraction_synchronized={metrics.fraction_synchronized:.6f}",
        f"final_accuracy_ns={metrics.accuracy_ns[-1]}",
        f"max_accuracy_ns={max(metrics.accuracy_ns)}",
        f"max_skew_ns={metrics.max_skew_ns}",
        f"max_abs_offset_ns={metrics.max_abs_offset_ns}",
        f"max_total_global_corr_ns={metrics.max_total_global_corr_ns}",
        f"min_reachable_peers={metrics.min_reachable_peers}",
        f"free_drift_end_day={free_day}",
    ]
    return lines


def write_summary(metrics: RunMetrics, path: str, scale_note: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(summary_lines(metrics, scale_note)) + "\n")
