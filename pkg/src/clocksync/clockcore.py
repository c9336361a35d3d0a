"""Drifting hardware clocks, amortized-correction logical clocks, and
reference-clock behaviors on an integer-nanosecond simulated timeline.

Two unit domains exist and must not be mixed: real (simulated UTC) time
`SimInstant` and per-node local time `LocalInstant`, both integer ns.  Only
offsets (differences) may cross between the two domains.  Python integers
never wrap, so overflow of the timeline is structurally impossible; bounds
are still validated where a negative or absurd value would indicate a bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional

from .intmath import ceil_frac, div_round_half_away, scale_round_half_away

# Type aliases for the two unit domains.  Keeping them as plain ints makes
# the simulator hot path cheap; the names document intent at API boundaries.
SimInstant = int  # real (simulated UTC) ns since scenario start, >= 0
LocalInstant = int  # a node's local/logical clock reading, ns

NS_PER_SEC = 10**9
NS_PER_HOUR = 3600 * NS_PER_SEC
NS_PER_DAY = 86_400 * NS_PER_SEC


@dataclass(frozen=True)
class HardwareClock:
    """Free-running oscillator: H(t) = h0 + t + round(drift*t).

    `drift` is the exact rational rate error (rate = 1 + drift), two-sided,
    |drift| <= the scenario bound.  `rate_changes` is a hook for
    piecewise-constant rates ((switch_time, new_drift) pairs, ascending);
    it is unused by default and the simulator requires it to be empty.
    """

    h0: LocalInstant = 0
    drift: Fraction = Fraction(0)
    rate_changes: tuple[tuple[SimInstant, Fraction], ...] = ()

    def read(self, t: SimInstant) -> LocalInstant:
        if t < 0:
            raise ValueError(f"hardware clock read at negative time {t}")
        if not self.rate_changes:
            return self.h0 + t + scale_round_half_away(t, self.drift)
        # Piecewise-constant rate: integrate each segment exactly, rounding
        # the accumulated rational once at the end.
        acc = Fraction(0)
        prev_t = 0
        drift = self.drift
        for switch, new_drift in self.rate_changes:
            if t <= switch:
                break
            acc += drift * (switch - prev_t)
            prev_t, drift = switch, new_drift
        acc += drift * (t - prev_t)
        return self.h0 + t + div_round_half_away(acc.numerator, acc.denominator)


def hw_read(clock: HardwareClock, t: SimInstant) -> LocalInstant:
    """Read the raw hardware clock at real time t."""
    return clock.read(t)


@dataclass(frozen=True)
class AdjustmentEntry:
    start: SimInstant
    duration_ns: int
    total_corr_ns: int

    def applied(self, t: SimInstant) -> int:
        """Correction fraction applied by real time t: 0 before start,
        total after start+duration, linear (rounded half away) in between."""
        if t <= self.start:
            return 0
        elapsed = t - self.start
        if elapsed >= self.duration_ns:
            return self.total_corr_ns
        return div_round_half_away(self.total_corr_ns * elapsed, self.duration_ns)


@dataclass(frozen=True)
class AdjustmentSchedule:
    entries: tuple[AdjustmentEntry, ...] = ()

    def applied(self, t: SimInstant) -> int:
        return sum(e.applied(t) for e in self.entries)

    def with_entry(self, entry: AdjustmentEntry) -> "AdjustmentSchedule":
        return AdjustmentSchedule(self.entries + (entry,))


@dataclass(frozen=True)
class LocalClockState:
    """Logical clock: hardware reading plus the sum of scheduled corrections.

    Value semantics: `adjust_time` returns a new state.  L is non-decreasing
    whenever every in-flight correction satisfies |corr|/duration < 1 - rho_max.
    """

    hw: HardwareClock
    adjustments: AdjustmentSchedule = field(default_factory=AdjustmentSchedule)

    def time(self, t: SimInstant) -> LocalInstant:
        return self.hw.read(t) + self.adjustments.applied(t)


def local_time(state: LocalClockState, t: SimInstant) -> LocalInstant:
    """Logical clock reading at real time t."""
    return state.time(t)


def adjust_time(
    state: LocalClockState, corr_ns: int, duration_ns: int, now: SimInstant
) -> LocalClockState:
    """Schedule a correction of corr_ns amortized linearly over duration_ns,
    starting at `now`.  Entries from concurrent loops may overlap; their
    applied fractions sum."""
    if duration_ns <= 0:
        raise ValueError(f"adjustment duration must be positive, got {duration_ns}")
    entry = AdjustmentEntry(start=now, duration_ns=duration_ns, total_corr_ns=corr_ns)
    return replace(state, adjustments=state.adjustments.with_entry(entry))


def max_drift(interval_ns: int, theta_minus_one: Fraction) -> int:
    """Maximum drift the local clock may accumulate over the interval:
    ceil((theta-1) * interval) with theta-1 the scenario drift bound."""
    if interval_ns <= 0:
        raise ValueError(f"interval must be positive, got {interval_ns}")
    if theta_minus_one < 0:
        raise ValueError("drift bound must be non-negative")
    return ceil_frac(theta_minus_one * interval_ns)


# --------------------------------------------------------------------------
# Reference clock (GNSS oracle) behaviors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Perfect:
    """Oracle that returns exactly the real time."""

    def read(self, t: SimInstant, rng) -> Optional[SimInstant]:
        return t

    def initial_reading(self, rng) -> SimInstant:
        return 0


@dataclass(frozen=True)
class BoundedError:
    """Oracle with per-query uniform error in [-epsilon, +epsilon] ns."""

    epsilon_ns: int = 100

    def read(self, t: SimInstant, rng) -> Optional[SimInstant]:
        return t + int(rng.integers(-self.epsilon_ns, self.epsilon_ns + 1))

    def initial_reading(self, rng) -> SimInstant:
        return int(rng.integers(-self.epsilon_ns, self.epsilon_ns + 1))


@dataclass(frozen=True)
class Outage:
    """Oracle that is unavailable during the configured real-time intervals
    (half-open [start, end)) and otherwise behaves like `base`."""

    intervals: tuple[tuple[SimInstant, SimInstant], ...]
    base: "ReferenceBehavior" = field(default_factory=Perfect)

    def read(self, t: SimInstant, rng) -> Optional[SimInstant]:
        for start, end in self.intervals:
            if start <= t < end:
                return None
        return self.base.read(t, rng)

    def initial_reading(self, rng) -> SimInstant:
        # Nodes joining during an outage were synchronized beforehand: the
        # scenario window starts with an honest initialization.
        return 0


@dataclass(frozen=True)
class Malicious:
    """Oracle reporting t + offset_fn(t).  Initialization is honest (the
    system is set up while the reference is still trustworthy); the malicious
    offset applies to queries at t > 0."""

    offset_fn: Callable[[SimInstant], int]

    def read(self, t: SimInstant, rng) -> Optional[SimInstant]:
        return t + int(self.offset_fn(t))

    def initial_reading(self, rng) -> SimInstant:
        return 0


ReferenceBehavior = Perfect | BoundedError | Outage | Malicious


def reference_time(behavior: ReferenceBehavior, t: SimInstant, rng) -> Optional[SimInstant]:
    """Query the reference oracle; None means unavailable (not an error)."""
    return behavior.read(t, rng)
