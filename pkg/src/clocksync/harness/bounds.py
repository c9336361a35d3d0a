"""Formal-bound verification against traces.

Each check compares an exactly-reconstructed trace quantity against the
corresponding closed-form bound (computed with exact rationals, then ceiled),
with a fixed 2 ns quantization slack per comparison.  Checks whose
preconditions the scenario does not meet are reported as SKIPPED with the
unmet precondition named, never judged.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .. import clockcore as cc
from ..intmath import ceil_frac, div_round_half_away, floor_frac
from ..netsim import TraceRow
from .config import ScenarioConfig

QUANT_SLACK_NS = 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # PASS | FAIL | SKIPPED
    observed_ns: Optional[int] = None
    bound_ns: Optional[int] = None
    note: str = ""

    @property
    def margin_ns(self) -> Optional[int]:
        if self.observed_ns is None or self.bound_ns is None:
            return None
        return self.bound_ns - self.observed_ns

    def line(self) -> str:
        if self.status == "SKIPPED":
            return f"CHECK {self.name} SKIPPED ({self.note})"
        extra = f" ({self.note})" if self.note else ""
        return (
            f"CHECK {self.name} {self.status} observed={self.observed_ns} "
            f"bound={self.bound_ns} margin={self.margin_ns}{extra}"
        )


def _judge(name: str, observed: int, bound: int, note: str = "") -> CheckResult:
    status = "PASS" if observed <= bound else "FAIL"
    return CheckResult(name, status, observed, bound, note)


class _TraceView:
    """Split rows into per-node round series and common-time samples, and
    reconstruct the local-only clock R_v by stripping global corrections."""

    def __init__(self, rows: Sequence[TraceRow], j_ns: int):
        self.j_ns = j_ns
        self.sample_t: list[int] = []
        by_t: dict[int, dict[int, int]] = {}
        self.round_rows: dict[int, list[TraceRow]] = {}
        for row in rows:
            if row.round == -1:
                by_t.setdefault(row.t_ns, {})[row.node] = row.offset_to_real_ns
            else:
                self.round_rows.setdefault(row.node, []).append(row)
        self.n = max(row.node for row in rows) + 1
        self.sample_t = sorted(by_t)
        self.sample_offsets = [
            [by_t[t][v] for v in range(self.n)] for t in self.sample_t
        ]
        for series in self.round_rows.values():
            series.sort(key=lambda r: r.round)
        self.rounds_completed = max(
            (rows_[-1].round for rows_ in self.round_rows.values()), default=0
        )

    def local_only_offsets(self) -> list[list[int]]:
        """R_v(t) - t at each sample: the recorded offset minus the applied
        fraction of every global correction entry (start=row.t, duration=J)."""
        out = [[0] * self.n for _ in self.sample_t]
        for v in range(self.n):
            entries = [
                (r.t_ns, r.applied_global_ns)
                for r in self.round_rows.get(v, [])
                if r.applied_global_ns != 0
            ]
            idx = 0
            settled = 0
            active: list[tuple[int, int]] = []
            for si, t in enumerate(self.sample_t):
                while idx < len(entries) and entries[idx][0] < t:
                    active.append(entries[idx])
                    idx += 1
                still = []
                applied = 0
                for start, corr in active:
                    elapsed = t - start
                    if elapsed >= self.j_ns:
                        settled += corr
                    else:
                        applied += div_round_half_away(corr * elapsed, self.j_ns)
                        still.append((start, corr))
                active = still
                out[si][v] = self.sample_offsets[si][v] - settled - applied
        return out


def check_bounds(rows: Sequence[TraceRow], config: ScenarioConfig) -> list[CheckResult]:
    view = _TraceView(rows, config.j_ns)
    rho = Fraction(config.max_drift_ns_per_day, cc.NS_PER_DAY)  # theta - 1
    theta = 1 + rho
    varrho = (theta * config.x + 1) * rho  # amortized local-clock drift rate
    md_i = cc.max_drift(config.i_ns, rho)
    md_j = cc.max_drift(config.j_ns, rho)
    results: list[CheckResult] = []

    local_off = view.local_only_offsets()
    honest_network = config.attacker_fraction == 0.0 and config.byzantine == "none"

    # Lemma: local-only clock drift envelope (holds for any reference).
    # Report the observation with the smallest margin against its own limit.
    t0 = view.sample_t[0]
    per_round_term = ceil_frac(config.x * rho * config.i_ns)
    tightest: Optional[tuple[int, int]] = None  # (observed, limit)
    for si, t in enumerate(view.sample_t):
        limit = ceil_frac(varrho * (t - t0)) + per_round_term + QUANT_SLACK_NS
        dev = max(abs(local_off[si][v] - local_off[0][v]) for v in range(view.n))
        if tightest is None or dev - limit > tightest[0] - tightest[1]:
            tightest = (dev, limit)
    assert tightest is not None
    results.append(_judge("lemma_local_drift_envelope", tightest[0], tightest[1]))

    # Corollary: reference tracking under an always-correct reference.
    if config.reference == "perfect":
        observed = max(abs(off) for sample in local_off for off in sample)
        results.append(
            _judge(
                "corollary_reference_tracking",
                observed,
                ceil_frac(2 * rho * config.i_ns) + QUANT_SLACK_NS,
            )
        )
    else:
        results.append(
            CheckResult(
                "corollary_reference_tracking", "SKIPPED",
                note="requires reference=perfect",
            )
        )

    # Good-reference skew bound.
    if config.reference == "perfect" and honest_network:
        observed = max(max(s) - min(s) for s in view.sample_offsets)
        results.append(
            _judge(
                "theorem_good_reference_skew",
                observed,
                ceil_frac(4 * rho * config.i_ns) + QUANT_SLACK_NS,
            )
        )
    else:
        results.append(
            CheckResult(
                "theorem_good_reference_skew", "SKIPPED",
                note="requires reference=perfect and an honest network",
            )
        )

    # Worst-case skew bound under the analysis-variant correction rule.
    if config.correction_rule == "analysis" and honest_network and config.delta_ns > 0:
        observed = max(max(s) - min(s) for s in view.sample_offsets)
        bound_exact = (
            4 * config.delta_ns
            + 11 * config.y * rho * config.j_ns
            + 2 * config.x * rho * config.i_ns
        )
        results.append(
            _judge(
                "theorem_worst_case_skew",
                observed,
                ceil_frac(bound_exact) + QUANT_SLACK_NS,
            )
        )
    else:
        results.append(
            CheckResult(
                "theorem_worst_case_skew", "SKIPPED",
                note="requires correction_rule=analysis, honest network, delta_ns > 0",
            )
        )

    # Reference-fault drift rate: accuracy growth during outages stays below
    # the amortized rate varrho (plus the local-clock interpolation slack).
    outages = [
        (s * cc.NS_PER_DAY, e * cc.NS_PER_DAY) for s, e in config.outage_intervals_days()
    ]
    if outages:
        worst_excess: Optional[tuple[int, int]] = None
        for start, end in outages:
            in_window = [
                (t, max(abs(o) for o in view.sample_offsets[i]))
                for i, t in enumerate(view.sample_t)
                if start <= t <= end
            ]
            if len(in_window) < 2:
                continue
            t_base, acc_base = in_window[0]
            for t, acc in in_window[1:]:
                limit = (
                    acc_base
                    + ceil_frac(varrho * (t - t_base))
                    + per_round_term
                    + QUANT_SLACK_NS
                )
                if worst_excess is None or acc - limit > worst_excess[0] - worst_excess[1]:
                    worst_excess = (acc, limit)
        if worst_excess is None:
            results.append(
                CheckResult(
                    "lemma_reference_fault_rate", "SKIPPED",
                    note="no two samples fall inside an outage interval",
                )
            )
        else:
            results.append(
                _judge("lemma_reference_fault_rate", worst_excess[0], worst_excess[1])
            )
    else:
        results.append(
            CheckResult(
                "lemma_reference_fault_rate", "SKIPPED", note="requires an outage schedule"
            )
        )

    # Reconvergence rate after an outage; only meaningful when 3XI/J < X-1.
    eps = Fraction(3) * config.x * config.i_ns / config.j_ns
    if not outages:
        results.append(
            CheckResult(
                "theorem_reconvergence_rate", "SKIPPED", note="requires an outage schedule"
            )
        )
    elif eps >= config.x - 1:
        results.append(
            CheckResult(
                "theorem_reconvergence_rate", "SKIPPED",
                note=f"requires 3XI/J < X-1 (got 3XI/J={eps}, X-1={config.x - 1})",
            )
        )
    else:
        rate = (config.x - 1 - eps) * rho  # recovery per unit real time
        floor_ns = ceil_frac(2 * rho * config.i_ns) + QUANT_SLACK_NS
        worst_pair: Optional[tuple[int, int]] = None
        last_end = max(e for _s, e in outages)
        post = [
            (t, max(abs(o) for o in view.sample_offsets[i]))
            for i, t in enumerate(view.sample_t)
            if t >= last_end
        ]
        if len(post) >= 2:
            t_base, acc_base = post[0]
            for t, acc in post[1:]:
                limit = max(acc_base - floor_frac(rate * (t - t_base)), floor_ns)
                limit += QUANT_SLACK_NS
                if worst_pair is None or acc - limit > worst_pair[0] - worst_pair[1]:
                    worst_pair = (acc, limit)
        if worst_pair is None:
            results.append(
                CheckResult(
                    "theorem_reconvergence_rate", "SKIPPED",
                    note="no post-outage samples",
                )
            )
        else:
            results.append(
                _judge("theorem_reconvergence_rate", worst_pair[0], worst_pair[1])
            )

    # Correction-cap accumulation ceiling (exact, from the round rows).
    max_corr_global = floor_frac(config.y * md_j)
    worst_total = 0
    worst_rounds = 0
    for v, series in view.round_rows.items():
        total = sum(abs(r.applied_global_ns) for r in series)
        if total > worst_total:
            worst_total, worst_rounds = total, series[-1].round
    ceiling = view.rounds_completed * max_corr_global
    results.append(
        _judge(
            "global_correction_ceiling", worst_total, ceiling,
            f"rounds={view.rounds_completed}",
        )
    )

    # Per-round caps, asserted on every round row.  The local column sums the
    # corrections since the previous global row, so its bound scales with the
    # number of local wakes that fit in one global interval.
    max_corr_local = floor_frac(config.x * md_i)
    worst_g = max(
        (abs(r.applied_global_ns) for s in view.round_rows.values() for r in s), default=0
    )
    results.append(_judge("global_round_cap", worst_g, max_corr_global))
    worst_l = max(
        (abs(r.applied_local_ns) for s in view.round_rows.values() for r in s), default=0
    )
    local_per_global = config.j_ns // config.i_ns + 1
    results.append(_judge("local_round_cap", worst_l, local_per_global * max_corr_local))

    return results


def report_lines(results: Sequence[CheckResult]) -> list[str]:
    return [r.line() for r in results]


def any_failure(results: Sequence[CheckResult]) -> bool:
    return any(r.status == "FAIL" for r in results)
