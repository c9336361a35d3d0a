"""Protocol round arithmetic: NTP offsets, fault-tolerant midpoint, and the
local/global synchronization round bodies as pure functions over integers.

Everything here is independent of the simulator.  All halvings round half
away from zero; with integer-ns measurements this pins the 1 ns that the
midpoint parity would otherwise leave ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .intmath import halve_round_half_away, sgn


class ConfigurationError(ValueError):
    """A parameter combination violates the protocol's input contract."""


@dataclass(frozen=True)
class SyncParams:
    """Protocol tunables shared by the round functions.

    n: number of peers in the agreed membership set (including self)
    f: assumed maximum number of faulty peers, n >= 3f+1
    i_ns / j_ns: local / global synchronization intervals, j >= i
    g_ns: global cutoff (dead zone half-width on the positive side)
    x / y: local / global correction impact factors, x > 1, y > x+1
    """

    n: int
    f: int
    i_ns: int
    j_ns: int
    g_ns: int
    x: Fraction
    y: Fraction

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigurationError(f"need at least one node, got n={self.n}")
        if self.f < 0:
            raise ConfigurationError(f"fault count must be >= 0, got f={self.f}")
        if self.n < 3 * self.f + 1:
            raise ConfigurationError(
                f"membership too small for fault bound: n={self.n} < 3f+1={3 * self.f + 1}"
            )
        if self.i_ns <= 0 or self.j_ns <= 0:
            raise ConfigurationError("intervals must be positive")
        if self.j_ns < self.i_ns:
            raise ConfigurationError(
                f"global interval must not be shorter than local: J={self.j_ns} < I={self.i_ns}"
            )
        if self.g_ns < 0:
            raise ConfigurationError("cutoff must be non-negative")
        if self.x <= 1:
            raise ConfigurationError(f"local impact factor must exceed 1, got {self.x}")
        if self.y <= self.x + 1:
            raise ConfigurationError(
                f"global impact factor must exceed x+1: y={self.y}, x={self.x}"
            )


def ntp_offset(t0: int, t1: int, t2: int, t3: int) -> int:
    """Clock offset from one four-timestamp exchange:
    ((t1 - t0) + (t2 - t3)) / 2, rounded half away from zero.

    t0/t3 are client clock readings at send/receive, t1/t2 server readings.
    """
    if t3 < t0:
        raise ValueError(f"client receive precedes send: t3={t3} < t0={t0}")
    return halve_round_half_away((t1 - t0) + (t2 - t3))


def median_offset(values: Sequence[int]) -> int:
    """Median of the offsets; empty input yields 0 (no information, no pull).
    Even-length medians average the two middle values, half away from zero."""
    if not values:
        return 0
    ordered = sorted(values)
    mid, odd = divmod(len(ordered), 2)
    if odd:
        return ordered[mid]
    return halve_round_half_away(ordered[mid - 1] + ordered[mid])


def ft_midpoint(values: Sequence[int], f: int) -> int:
    """Fault-tolerant midpoint: (values[f] + values[-1-f]) / 2 over the
    ascending vector, tolerating up to f arbitrary entries for |values| >= 3f+1."""
    n = len(values)
    if f < 0:
        raise ConfigurationError(f"fault count must be >= 0, got {f}")
    if n < 3 * f + 1:
        raise ConfigurationError(f"midpoint needs at least 3f+1={3 * f + 1} values, got {n}")
    if any(values[i] > values[i + 1] for i in range(n - 1)):
        raise ValueError("measurement vector must be sorted ascending")
    return halve_round_half_away(values[f] + values[n - 1 - f])


def local_sync_round(
    ref_reading: Optional[int], local_now: int, max_corr_ns: int
) -> Optional[int]:
    """One body of the local synchronization loop.

    Returns the correction to schedule over the local interval, or None when
    no adjustment happens (reference unavailable or zero offset).  The caller
    precomputes max_corr_ns = floor(x * max_drift(i)).
    """
    if ref_reading is None:
        return None
    loff = ref_reading - local_now
    if loff == 0:
        return None
    return sgn(loff) * min(abs(loff), max_corr_ns)


@dataclass(frozen=True)
class GlobalRoundOutcome:
    """Result of one global round: the agreed offset, the correction actually
    scheduled (0 inside the dead zone), and whether the cap was binding."""

    goff: int
    applied_corr: int
    capped: bool


def global_sync_round(
    sorted_measurements: Sequence[int], params: SyncParams, max_corr_ns: int
) -> GlobalRoundOutcome:
    """Cutoff rule: correct toward the fault-tolerant midpoint only when it
    exceeds the global cutoff, capped at max_corr_ns = floor(y * max_drift(j))."""
    goff = ft_midpoint(sorted_measurements, params.f)
    if abs(goff) <= params.g_ns:
        return GlobalRoundOutcome(goff=goff, applied_corr=0, capped=False)
    capped = abs(goff) > max_corr_ns
    corr = sgn(goff) * min(abs(goff), max_corr_ns)
    return GlobalRoundOutcome(goff=goff, applied_corr=corr, capped=capped)


def global_sync_round_analysis_variant(
    sorted_measurements: Sequence[int],
    params: SyncParams,
    delta_ns: int,
    pull_per_round: Fraction,
    step_ns: int,
) -> GlobalRoundOutcome:
    """Fixed-step rule with an asymmetric dead zone:

      goff >= delta + 2*pull  ->  +step
      goff <= -2*pull         ->  -step
      otherwise               ->   0

    pull_per_round is the exact rational y*(theta-1)*j; step_ns its integer
    floor after scaling by y (the same cap the cutoff rule uses), so applied
    corrections stay integer ns.
    """
    if delta_ns <= 0:
        raise ConfigurationError("analysis-variant rule requires a positive delta")
    goff = ft_midpoint(sorted_measurements, params.f)
    if goff >= delta_ns + 2 * pull_per_round:
        return GlobalRoundOutcome(goff=goff, applied_corr=step_ns, capped=True)
    if goff <= -2 * pull_per_round:
        return GlobalRoundOutcome(goff=goff, applied_corr=-step_ns, capped=True)
    return GlobalRoundOutcome(goff=goff, applied_corr=0, capped=False)


def path_aware_offset(per_path_results: Sequence[tuple[int, int, int, int, bool]]) -> int:
    """Median of the per-path NTP offsets over the exchanges marked ok.
    All-failed (or empty) input yields 0."""
    offsets = [ntp_offset(t0, t1, t2, t3) for t0, t1, t2, t3, ok in per_path_results if ok]
    return median_offset(offsets)
