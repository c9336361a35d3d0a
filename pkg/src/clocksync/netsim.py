"""Deterministic discrete-event engine running N synchronization nodes.

The engine schedules local/global loop wakes on each node's *logical* clock,
performs NTP exchanges over the selected paths with bounded-uncertainty
delays and attacker-injected asymmetry, and records one trace row per node
per global round plus common-real-time sample rows.

Determinism contract: every run is a pure function of (config, topology,
attacker assignment).  Events are totally ordered by (fire_at, seq); all
randomness is drawn from per-purpose child streams of the run seed so adding
nodes does not perturb the randomness of others.

Measurement placement: all of a node's per-peer, per-path exchanges for a
round are launched at the round's wake and evaluated against peer clock
schedules as of launch.  An adjustment entry started while a packet is in
flight would contribute at most corr*(flight/duration) < 1 ns, which is
folded into the measurement-error budget instead of being simulated as
per-packet arrival events.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import adversary as adv
from . import clockcore as cc
from . import ftsync, topo as topo_mod
from .intmath import ceil_frac, div_round_half_away, floor_frac, halve_round_half_away, sgn

_EMPTY_SLOT_START = 2**62
_PAD_SENTINEL = 2**62


class EventKind(IntEnum):
    LOCAL_SYNC_WAKE = 0
    GLOBAL_SYNC_WAKE = 1
    SAMPLE = 2
    # Reserved: per-packet delivery.  The reference engine evaluates
    # exchanges at launch time (see module docstring), so it never
    # schedules events of this kind.
    PACKET_ARRIVAL = 3


class Event(NamedTuple):
    fire_at: int  # SimInstant
    seq: int  # monotone scheduling counter; breaks fire_at ties
    kind: EventKind
    node: int


class TraceRow(NamedTuple):
    round: int  # global round >= 1; -1 marks common-time sample rows
    t_ns: int
    node: int
    offset_to_real_ns: int
    goff_ns: int
    applied_global_ns: int
    applied_local_ns: int
    reachable_peers: int


TRACE_HEADER = (
    "round,t_ns,node,offset_to_real_ns,goff_ns,applied_global_ns,"
    "applied_local_ns,reachable_peers"
)


@dataclass(frozen=True)
class DelayModel:
    """Per-hop processing delay: fixed part plus uniform jitter in
    [0, hop_jitter_ns]; optional per-packet drop probability.  Together with
    link propagation this realizes one-way delays in the path's
    [d - u, d] window before attacker injection."""

    hop_fixed_ns: int = 1_000
    hop_jitter_ns: int = 1_000
    drop_prob: float = 0.0

    def __post_init__(self) -> None:
        if self.hop_fixed_ns < 0 or self.hop_jitter_ns < 0:
            raise ValueError("per-hop delays must be non-negative")
        if not (0.0 <= self.drop_prob < 1.0):
            raise ValueError(f"drop probability out of range: {self.drop_prob}")


@dataclass(frozen=True)
class NtpExchangeRecord:
    t0: int
    t1: int
    t2: int
    t3: int
    ok: bool
    path: Optional[topo_mod.Path]
    fwd_delay_ns: int  # realized real-time delays, diagnostic only
    bwd_delay_ns: int


@dataclass(frozen=True)
class SimConfig:
    """Everything the engine needs; built by the harness from a scenario."""

    n: int
    f: int
    i_ns: int
    j_ns: int
    g_ns: int
    x: Fraction
    y: Fraction
    rho_max_ns_per_day: int
    horizon_ns: int
    seed: int
    correction_rule: str = "cutoff"  # "cutoff" | "analysis"
    delta_ns: Optional[int] = None
    reference_factory: Callable[[int], cc.ReferenceBehavior] = lambda _v: cc.Perfect()
    path_strategy: str = "shortest"
    k: int = 5
    hop_limit: int = topo_mod.DEFAULT_HOP_LIMIT
    path_cap: int = topo_mod.DEFAULT_PATH_CAP
    delay: DelayModel = field(default_factory=DelayModel)
    timeout_factor: int = 4
    sample_interval_ns: int = cc.NS_PER_HOUR
    first_round_local_ns: Optional[int] = None  # default: j_ns
    byzantine: Optional[adv.ByzantineStrategy] = None
    debug_delay_checks: bool = True

    def sync_params(self) -> ftsync.SyncParams:
        return ftsync.SyncParams(
            n=self.n, f=self.f, i_ns=self.i_ns, j_ns=self.j_ns, g_ns=self.g_ns,
            x=self.x, y=self.y,
        )

    @property
    def theta_minus_one(self) -> Fraction:
        return Fraction(self.rho_max_ns_per_day, cc.NS_PER_DAY)

    def validate(self) -> None:
        self.sync_params()
        if self.rho_max_ns_per_day < 0:
            raise ftsync.ConfigurationError("drift bound must be non-negative")
        if self.horizon_ns < self.j_ns:
            raise ftsync.ConfigurationError("horizon must cover at least one global round")
        if self.correction_rule not in ("cutoff", "analysis"):
            raise ftsync.ConfigurationError(
                f"unknown correction rule {self.correction_rule!r}"
            )
        if self.correction_rule == "analysis" and not self.delta_ns:
            raise ftsync.ConfigurationError(
                "analysis correction rule requires a positive delta_ns"
            )
        if self.k < 1:
            raise ftsync.ConfigurationError("path count k must be >= 1")
        if self.timeout_factor < 1:
            raise ftsync.ConfigurationError("timeout factor must be >= 1")
        if self.sample_interval_ns <= 0:
            raise ftsync.ConfigurationError("sample interval must be positive")


@dataclass
class Trace:
    rows: list[TraceRow]
    n: int
    horizon_ns: int
    rounds_completed: int
    meta: dict[str, str]


def _rng_streams(seed: int):
    """One spawn layout for the whole run: topology and attacker sampling use
    the first two children (consumed by the harness), the engine the rest."""
    root = np.random.SeedSequence(seed)
    topo_ss, attacker_ss, drift_ss, select_ss, nodes_ss = root.spawn(5)
    return topo_ss, attacker_ss, drift_ss, select_ss, nodes_ss


def sample_drifts(n: int, rho_max_ns_per_day: int, seed: int) -> list[int]:
    """Per-node drift rates, uniform integers in [-rho, +rho] ns/day.
    Quantizing to 1 ns/day keeps rates exact rationals with a shared
    denominator, which the vectorized clock evaluation relies on."""
    _, _, drift_ss, _, _ = _rng_streams(seed)
    rng = np.random.default_rng(drift_ss)
    return [int(d) for d in rng.integers(-rho_max_ns_per_day, rho_max_ns_per_day + 1, size=n)]


def _rdiv_half_away(num: np.ndarray, den) -> np.ndarray:
    """Vectorized num/den rounded half away from zero (den > 0).
    Values stay below 2**62 so the doubling cannot overflow int64."""
    q = np.abs(num)
    q <<= 1
    q += den
    q //= 2 * den
    np.negative(q, out=q, where=num < 0)
    return q


def _halve_half_away(num: np.ndarray) -> np.ndarray:
    q = np.abs(num)
    q += 1
    q >>= 1
    np.negative(q, out=q, where=num < 0)
    return q


def ntp_measure(
    client: cc.LocalClockState,
    server: cc.LocalClockState,
    path: topo_mod.Path,
    topology: topo_mod.Topology,
    delay: DelayModel,
    t_start: int,
    rng: np.random.Generator,
    assignment: Optional[adv.AttackerAssignment] = None,
    byzantine: Optional[adv.ByzantineStrategy] = None,
    timeout_factor: int = 4,
    deadline_local: Optional[int] = None,
) -> NtpExchangeRecord:
    """Scalar reference implementation of one NTP exchange.

    The request traverses the path forward, the response the same path
    reversed.  Timestamps t0/t3 come from the client clock, t1/t2 from the
    server clock; ok=False on drop, round trips beyond timeout_factor times
    the path's nominal RTT, or completion past the local-time deadline.
    """
    prop = topology.path_latency(path)
    hops = path.hops
    base = prop + hops * delay.hop_fixed_ns
    jit_f = jit_b = 0
    if delay.hop_jitter_ns > 0:
        draws = rng.integers(0, delay.hop_jitter_ns + 1, size=2 * hops)
        jit_f = int(draws[:hops].sum())
        jit_b = int(draws[hops:].sum())
    dropped = False
    if delay.drop_prob > 0.0:
        dr = rng.random(size=2)
        dropped = bool(dr[0] < delay.drop_prob or dr[1] < delay.drop_prob)
    fwd = base + jit_f
    bwd = base + jit_b
    if assignment is not None:
        fwd = adv.inject_delay(fwd, path.nodes, False, assignment)
        bwd = adv.inject_delay(bwd, path.nodes, True, assignment)

    t0 = client.time(t_start)
    arrival = t_start + fwd
    t1 = t2 = server.time(arrival)
    if byzantine is not None:
        t1, t2 = adv.byzantine_peer_response(byzantine, t1, t2, arrival, rng)
    t3 = client.time(arrival + bwd)

    ok = not dropped
    ok = ok and (fwd + bwd) <= timeout_factor * 2 * base
    ok = ok and t3 >= t0 and t2 >= t1
    if deadline_local is not None:
        ok = ok and t3 <= deadline_local
    return NtpExchangeRecord(t0, t1, t2, t3, ok, path, fwd, bwd)


class _NodeRuntime:
    """Per-node mutable bookkeeping.  Clock state itself lives in the shared
    engine arrays; this object carries schedule targets and streams."""

    __slots__ = (
        "idx", "behavior", "ref_rng", "net_rng", "local_target", "global_target",
        "global_round", "local_corr_acc",
    )

    def __init__(self, idx, behavior, ref_rng, net_rng):
        self.idx = idx
        self.behavior = behavior
        self.ref_rng = ref_rng
        self.net_rng = net_rng
        self.local_target = 0
        self.global_target = 0
        self.global_round = 0
        self.local_corr_acc = 0


class Simulation:
    """One scenario run.  Single-threaded; owns all of its state.

    Clock state lives in flat int64 arrays (plus exact python-int mirrors for
    the scalar path); both evaluations share the same rounding rules, so they
    agree bit-for-bit.  Wake intervals of at least I real-minus-slew time mean
    at most two local and two global correction entries can overlap."""

    MAX_ENTRY_SLOTS = 4

    def __init__(
        self,
        cfg: SimConfig,
        topology: topo_mod.Topology,
        attackers: Optional[adv.AttackerAssignment] = None,
        path_cache: Optional[dict[tuple[int, int], topo_mod.PathSet]] = None,
    ):
        cfg.validate()
        if topology.n != cfg.n:
            raise ftsync.ConfigurationError(
                f"topology has {topology.n} nodes, config expects {cfg.n}"
            )
        self.cfg = cfg
        self.topology = topology
        self.attackers = attackers or adv.AttackerAssignment(cfg.n, (), {})

        self.theta_minus_one = cfg.theta_minus_one
        self.md_i = cc.max_drift(cfg.i_ns, self.theta_minus_one)
        self.md_j = cc.max_drift(cfg.j_ns, self.theta_minus_one)
        self.max_corr_local = floor_frac(cfg.x * self.md_i)
        self.max_corr_global = floor_frac(cfg.y * self.md_j)
        pull = cfg.y * self.theta_minus_one * cfg.j_ns  # exact Y*(theta-1)*J
        self._analysis_hi = ceil_frac((cfg.delta_ns or 0) + 2 * pull)
        self._analysis_lo = floor_frac(-2 * pull)
        self._deadline_slack = cfg.j_ns - self.max_corr_global

        _, _, _, select_ss, nodes_ss = _rng_streams(cfg.seed)
        drifts = sample_drifts(cfg.n, cfg.rho_max_ns_per_day, cfg.seed)
        select_rng = np.random.default_rng(select_ss)

        n = cfg.n
        self._k_py = drifts
        self._h0_py: list[int] = []
        self._settled_py: list[int] = [0] * n
        self._entries_py: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        self._h0 = np.zeros(n, dtype=np.int64)
        self._k = np.asarray(drifts, dtype=np.int64)
        self._settled = np.zeros(n, dtype=np.int64)
        slots = self.MAX_ENTRY_SLOTS
        self._ent_start = np.full((n, slots), _EMPTY_SLOT_START, dtype=np.int64)
        self._ent_dur = np.ones((n, slots), dtype=np.int64)
        self._ent_corr = np.zeros((n, slots), dtype=np.int64)

        self.nodes: list[_NodeRuntime] = []
        for v, node_ss in enumerate(nodes_ss.spawn(n)):
            ref_ss, net_ss = node_ss.spawn(2)
            behavior = cfg.reference_factory(v)
            runtime = _NodeRuntime(
                v, behavior, np.random.default_rng(ref_ss), np.random.default_rng(net_ss)
            )
            init = behavior.initial_reading(runtime.ref_rng)
            self._h0_py.append(init)
            self._h0[v] = init
            runtime.local_target = init
            runtime.global_target = init + (
                cfg.first_round_local_ns if cfg.first_round_local_ns is not None else cfg.j_ns
            )
            self.nodes.append(runtime)

        self._build_measurement_tables(path_cache, select_rng)

        # Bracket half-width for logical-clock inversion: generous bound on
        # how far L can deviate from a slope-1 line over one global interval.
        ratio = cfg.j_ns // cfg.i_ns + 2
        self._invert_slack = 4 * (
            self.max_corr_local * ratio + self.max_corr_global + self.md_j + self.md_i
        ) + 1024

        self._heap: list[Event] = []
        self._seq = 0
        self.rows: list[TraceRow] = []
        self.rounds_completed = 0

    # ---------------------------------------------------------------- setup

    def _build_measurement_tables(self, path_cache, select_rng) -> None:
        """Static per-node flat arrays describing every (peer, path) exchange."""
        cfg = self.cfg
        n = cfg.n
        topology = self.topology
        if n > 1 and path_cache is None:
            path_cache = topo_mod.build_path_cache(topology, cfg.hop_limit, cfg.path_cap)
        self.selected_paths: dict[tuple[int, int], list[topo_mod.Path]] = (
            topo_mod.select_all_pairs(topology, path_cache, cfg.path_strategy, cfg.k, select_rng)
            if n > 1
            else {}
        )

        byz_members = self.attackers.compromised_set if cfg.byzantine is not None else frozenset()

        self._meas: list[Optional[dict]] = []
        lat_memo: dict[tuple[int, ...], int] = {}
        for v in range(n):
            peers = [w for w in range(n) if w != v]
            cell_srv: list[int] = []
            cell_peer_pos: list[int] = []
            cell_prop: list[int] = []
            cell_hops: list[int] = []
            cell_atk_f: list[int] = []
            cell_atk_b: list[int] = []
            for pos, w in enumerate(peers):
                chosen = self.selected_paths[(v, w)]
                for path in chosen:
                    lat = lat_memo.get(path.links)
                    if lat is None:
                        lat = topology.path_latency(path)
                        lat_memo[path.links] = lat
                    cell_srv.append(w)
                    cell_peer_pos.append(pos)
                    cell_prop.append(lat)
                    cell_hops.append(path.hops)
                    cell_atk_f.append(
                        adv.injected_asymmetry_ns(path.nodes, False, self.attackers)
                    )
                    cell_atk_b.append(
                        adv.injected_asymmetry_ns(path.nodes, True, self.attackers)
                    )
            if not peers:
                self._meas.append(None)
                continue
            cells = len(cell_srv)
            hops_arr = np.asarray(cell_hops, dtype=np.int64)
            prop_arr = np.asarray(cell_prop, dtype=np.int64)
            base = prop_arr + hops_arr * cfg.delay.hop_fixed_ns
            peer_pos = np.asarray(cell_peer_pos, dtype=np.int64)
            # Column of each cell within its peer's padded (k-wide) row, and
            # reduceat boundaries per peer (cells are grouped peer-major).
            cols = np.zeros(cells, dtype=np.int64)
            for i in range(1, cells):
                cols[i] = cols[i - 1] + 1 if peer_pos[i] == peer_pos[i - 1] else 0
            group_starts = np.searchsorted(peer_pos, np.arange(len(peers)))
            empty_groups = group_starts == np.append(group_starts[1:], cells)
            table = {
                "group_starts": np.minimum(group_starts, max(cells - 1, 0)),
                "empty_groups": empty_groups,
                "peers": peers,
                "cells": cells,
                "srv": np.asarray(cell_srv, dtype=np.int64),
                "peer_pos": peer_pos,
                "slot_index": peer_pos * cfg.k + cols,
                "hops": hops_arr,
                "base": base,
                "nominal_rtt": 2 * base,
                "atk_f": np.asarray(cell_atk_f, dtype=np.int64),
                "atk_b": np.asarray(cell_atk_b, dtype=np.int64),
                "byz": np.asarray([s in byz_members for s in cell_srv], dtype=bool),
                "total_hops": int(hops_arr.sum()),
                "hop_offsets": np.concatenate(
                    ([0], np.cumsum(hops_arr)[:-1])
                ).astype(np.int64) if cells else np.zeros(0, dtype=np.int64),
            }
            self._meas.append(table)

    # ------------------------------------------------------------- clocking

    def _eval_scalar(self, v: int, t: int) -> int:
        k = self._k_py[v]
        value = (
            self._h0_py[v]
            + t
            + (t // cc.NS_PER_DAY) * k
            + div_round_half_away((t % cc.NS_PER_DAY) * k, cc.NS_PER_DAY)
            + self._settled_py[v]
        )
        for start, dur, corr in self._entries_py[v]:
            if t > start:
                elapsed = t - start
                value += corr if elapsed >= dur else div_round_half_away(corr * elapsed, dur)
        return value

    def _eval_vec(self, idx: np.ndarray, t: np.ndarray) -> np.ndarray:
        D = cc.NS_PER_DAY
        k = self._k[idx]
        base = self._h0[idx] + t + (t // D) * k + _rdiv_half_away((t % D) * k, D)
        starts = self._ent_start[idx]
        durs = self._ent_dur[idx]
        corrs = self._ent_corr[idx]
        elapsed = np.clip(t[:, None] - starts, 0, durs)
        adj = _rdiv_half_away(corrs * elapsed, durs).sum(axis=1)
        return base + adj + self._settled[idx]

    def _eval_self(self, v: int, t: np.ndarray) -> np.ndarray:
        """Same logical clock as _eval_vec but for one node at many times;
        iterates that node's few entries instead of gathering slot arrays."""
        D = cc.NS_PER_DAY
        k = self._k_py[v]
        value = t + (self._h0_py[v] + self._settled_py[v])
        if k:
            value = value + ((t // D) * k + _rdiv_half_away((t % D) * k, D))
        t_max = int(t.max()) if len(t) else 0
        for start, dur, corr in self._entries_py[v]:
            if start >= t_max:
                continue
            elapsed = np.clip(t - start, 0, dur)
            value = value + _rdiv_half_away(corr * elapsed, dur)
        return value

    def local_clock_state(self, v: int) -> cc.LocalClockState:
        """Materialize the node's clock as a value object (inspection only).
        Settled corrections appear as one already-completed entry; like the
        engine arrays, the result is valid for reads at or after the node's
        latest adjustment time."""
        hw = cc.HardwareClock(
            h0=self._h0_py[v], drift=Fraction(self._k_py[v], cc.NS_PER_DAY)
        )
        entries = []
        if self._settled_py[v]:
            entries.append(cc.AdjustmentEntry(-1, 1, self._settled_py[v]))
        entries += [cc.AdjustmentEntry(s, d, c) for s, d, c in self._entries_py[v]]
        return cc.LocalClockState(hw=hw, adjustments=cc.AdjustmentSchedule(tuple(entries)))

    def _append_entry(self, v: int, start: int, dur: int, corr: int) -> None:
        # Settle finished entries into the running sum, then store the new
        # one.  Settling folds a completed entry into a time-independent
        # constant, so clock reads are only valid at t >= the latest append's
        # start; the event loop's time ordering guarantees that.
        kept: list[tuple[int, int, int]] = []
        for st, du, co in self._entries_py[v]:
            if st + du <= start:
                self._settled_py[v] += co
            else:
                kept.append((st, du, co))
        kept.append((start, dur, corr))
        if len(kept) > self.MAX_ENTRY_SLOTS:
            raise RuntimeError(f"adjustment slots exhausted on node {v}")
        self._entries_py[v] = kept
        self._settled[v] = self._settled_py[v]
        self._ent_start[v] = _EMPTY_SLOT_START
        self._ent_dur[v] = 1
        self._ent_corr[v] = 0
        for a, (st, du, co) in enumerate(kept):
            self._ent_start[v, a] = st
            self._ent_dur[v, a] = du
            self._ent_corr[v, a] = co

    def _invert(self, v: int, target: int, now: int) -> int:
        """Minimal real time t > now with L_v(t) >= target (exact bisection
        on the quantized logical clock)."""
        l_now = self._eval_scalar(v, now)
        if l_now >= target:
            raise RuntimeError("wake target not ahead of current logical time")
        guess = now + (target - l_now)
        slack = self._invert_slack
        lo = max(now, guess - slack)
        if self._eval_scalar(v, lo) >= target:
            lo = now
        hi = guess + slack
        while self._eval_scalar(v, hi) < target:
            slack *= 2
            hi += slack
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._eval_scalar(v, mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi

    # --------------------------------------------------------------- events

    def _push(self, fire_at: int, kind: EventKind, node: int) -> Event:
        ev = Event(fire_at, self._seq, kind, node)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def schedule_next_wake(self, node: int, interval_ns: int, kind: EventKind) -> Event:
        """Schedule the node's next wake for when its logical clock has
        advanced by exactly interval_ns past the current wake's logical
        timestamp, honoring in-flight adjustments."""
        if interval_ns <= 0:
            raise ValueError("wake interval must be positive")
        runtime = self.nodes[node]
        if kind == EventKind.LOCAL_SYNC_WAKE:
            runtime.local_target += interval_ns
            target = runtime.local_target
        elif kind == EventKind.GLOBAL_SYNC_WAKE:
            runtime.global_target += interval_ns
            target = runtime.global_target
        else:
            raise ValueError(f"cannot reschedule event kind {kind}")
        return self._push(self._invert(node, target, self._now), kind, node)

    # ------------------------------------------------------------ round body

    def _local_wake(self, v: int, t: int) -> None:
        runtime = self.nodes[v]
        reading = cc.reference_time(runtime.behavior, t, runtime.ref_rng)
        corr = ftsync.local_sync_round(reading, self._eval_scalar(v, t), self.max_corr_local)
        if corr is not None:
            self._append_entry(v, t, self.cfg.i_ns, corr)
            runtime.local_corr_acc += corr
        self.schedule_next_wake(v, self.cfg.i_ns, EventKind.LOCAL_SYNC_WAKE)

    def _global_wake(self, v: int, t: int) -> None:
        cfg = self.cfg
        runtime = self.nodes[v]
        runtime.global_round += 1
        r = runtime.global_round
        table = self._meas[v]
        t0 = self._eval_scalar(v, t)

        if table is None:
            medians = np.zeros(0, dtype=np.int64)
            reachable = 0
        elif table["cells"] == 0:
            medians = np.zeros(len(table["peers"]), dtype=np.int64)
            reachable = 0
        else:
            medians, reachable = self._measure_all(v, t, t0, runtime)

        vector = np.empty(len(medians) + 1, dtype=np.int64)
        vector[0] = 0
        vector[1:] = medians
        vector.sort()
        goff = halve_round_half_away(int(vector[cfg.f]) + int(vector[cfg.n - 1 - cfg.f]))

        corr = 0
        if cfg.correction_rule == "cutoff":
            if abs(goff) > cfg.g_ns:
                corr = sgn(goff) * min(abs(goff), self.max_corr_global)
        else:
            if goff >= self._analysis_hi:
                corr = self.max_corr_global
            elif goff <= self._analysis_lo:
                corr = -self.max_corr_global
        if corr:
            self._append_entry(v, t, cfg.j_ns, corr)

        self.rows.append(
            TraceRow(r, t, v, t0 - t, goff, corr, runtime.local_corr_acc, reachable)
        )
        runtime.local_corr_acc = 0
        self.rounds_completed = max(self.rounds_completed, r)
        self.schedule_next_wake(v, cfg.j_ns, EventKind.GLOBAL_SYNC_WAKE)

    def _measure_all(self, v: int, t: int, t0: int, runtime: _NodeRuntime):
        """Vectorized exchange batch for one global wake: returns the per-peer
        median offsets (0 for unreachable peers) and the reachable count."""
        cfg = self.cfg
        table = self._meas[v]
        cells = table["cells"]
        rng = runtime.net_rng

        jit_f = jit_b = 0
        if cfg.delay.hop_jitter_ns > 0 and table["total_hops"]:
            draws = rng.integers(
                0, cfg.delay.hop_jitter_ns + 1, size=2 * table["total_hops"], dtype=np.int64
            )
            jit_f = np.add.reduceat(draws[: table["total_hops"]], table["hop_offsets"])
            jit_b = np.add.reduceat(draws[table["total_hops"]:], table["hop_offsets"])
        dropped = np.zeros(cells, dtype=bool)
        if cfg.delay.drop_prob > 0.0:
            dr = rng.random(size=2 * cells)
            dropped = (dr[:cells] < cfg.delay.drop_prob) | (dr[cells:] < cfg.delay.drop_prob)

        fwd = table["base"] + jit_f + table["atk_f"]
        bwd = table["base"] + jit_b + table["atk_b"]
        if cfg.debug_delay_checks:
            # Honest (pre-injection) delays must stay in the [d-u, d] window.
            d_max = table["base"] + table["hops"] * cfg.delay.hop_jitter_ns
            assert bool(((fwd - table["atk_f"]) >= table["base"]).all())
            assert bool(((fwd - table["atk_f"]) <= d_max).all())
            assert bool(((bwd - table["atk_b"]) >= table["base"]).all())
            assert bool(((bwd - table["atk_b"]) <= d_max).all())

        arrival = t + fwd
        t1 = self._eval_vec(table["srv"], arrival)
        if cfg.byzantine is not None and table["byz"].any():
            t1 = self._apply_byzantine(table, t1, arrival, rng)
        t2 = t1
        t3_real = arrival + bwd
        t3 = self._eval_self(v, t3_real)

        deadline = runtime.global_target + self._deadline_slack
        ok = (
            ~dropped
            & ((fwd + bwd) <= cfg.timeout_factor * table["nominal_rtt"])
            & (t3 >= t0)
            & (t3 <= deadline)
        )
        m = _halve_half_away((t1 - t0) + (t2 - t3))

        n_peers = len(table["peers"])
        flat = np.full(n_peers * cfg.k, _PAD_SENTINEL, dtype=np.int64)
        flat[table["slot_index"][ok]] = m[ok]
        padded = flat.reshape(n_peers, cfg.k)
        counts = np.add.reduceat(ok.astype(np.int64), table["group_starts"])
        counts[table["empty_groups"]] = 0
        padded.sort(axis=1)
        lo_idx = np.maximum(counts - 1, 0) // 2
        hi_idx = counts // 2
        lo = np.take_along_axis(padded, lo_idx[:, None], axis=1)[:, 0]
        hi = np.take_along_axis(padded, np.minimum(hi_idx, cfg.k - 1)[:, None], axis=1)[:, 0]
        medians = np.where(counts > 0, _halve_half_away(lo + hi), 0)
        return medians, int((counts > 0).sum())

    def _apply_byzantine(self, table, t1, arrival, rng):
        strategy = self.cfg.byzantine
        byz = table["byz"]
        t1 = t1.copy()
        if isinstance(strategy, adv.ConstantShift):
            t1[byz] += strategy.shift_ns
        elif isinstance(strategy, adv.CollusivePull):
            t1[byz] = arrival[byz] + strategy.target_offset_ns
        elif isinstance(strategy, adv.RandomNoise):
            count = int(byz.sum())
            noise = rng.integers(-strategy.bound_ns, strategy.bound_ns + 1, size=count)
            t1[byz] += noise
        else:
            raise TypeError(f"unknown byzantine strategy: {strategy!r}")
        return t1

    def _sample(self, t: int) -> None:
        idx = np.arange(self.cfg.n, dtype=np.int64)
        values = self._eval_vec(idx, np.full(self.cfg.n, t, dtype=np.int64))
        for v in range(self.cfg.n):
            self.rows.append(TraceRow(-1, t, v, int(values[v]) - t, 0, 0, 0, -1))

    # ------------------------------------------------------------------ run

    def run(self) -> Trace:
        cfg = self.cfg
        self._now = 0
        for v in range(cfg.n):
            self._push(0, EventKind.LOCAL_SYNC_WAKE, v)
        for v in range(cfg.n):
            runtime = self.nodes[v]
            self._push(
                self._invert(v, runtime.global_target, 0), EventKind.GLOBAL_SYNC_WAKE, v
            )
        t_sample = 0
        while t_sample <= cfg.horizon_ns:
            self._push(t_sample, EventKind.SAMPLE, 0)
            t_sample += cfg.sample_interval_ns

        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.fire_at > cfg.horizon_ns:
                break
            self._now = ev.fire_at
            if ev.kind == EventKind.SAMPLE:
                self._sample(ev.fire_at)
                continue
            if ev.kind == EventKind.LOCAL_SYNC_WAKE:
                target = self.nodes[ev.node].local_target
            elif ev.kind == EventKind.GLOBAL_SYNC_WAKE:
                target = self.nodes[ev.node].global_target
            else:
                raise RuntimeError(f"unexpected event kind {ev.kind}")
            # Corrections issued after scheduling may have slowed the logical
            # clock below the wake target; re-validate and push the wake to
            # the true crossing so sleeps never end early in logical time.
            if self._eval_scalar(ev.node, ev.fire_at) < target:
                self._push(self._invert(ev.node, target, ev.fire_at), ev.kind, ev.node)
                continue
            if ev.kind == EventKind.LOCAL_SYNC_WAKE:
                self._local_wake(ev.node, ev.fire_at)
            else:
                self._global_wake(ev.node, ev.fire_at)
        else:
            raise RuntimeError("event queue exhausted before the horizon")

        meta = {
            "nodes": str(cfg.n),
            "seed": str(cfg.seed),
            "timeout_factor": str(cfg.timeout_factor),
            "rounds_completed": str(self.rounds_completed),
        }
        return Trace(
            rows=self.rows,
            n=cfg.n,
            horizon_ns=cfg.horizon_ns,
            rounds_completed=self.rounds_completed,
            meta=meta,
        )


def run_scenario(
    cfg: SimConfig,
    topology: topo_mod.Topology,
    attackers: Optional[adv.AttackerAssignment] = None,
    path_cache: Optional[dict[tuple[int, int], topo_mod.PathSet]] = None,
) -> Trace:
    """Execute one scenario to its horizon and return the trace."""
    return Simulation(cfg, topology, attackers, path_cache).run()


def write_trace_csv(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for row in trace.rows:
            fh.write(
                f"{row.round},{row.t_ns},{row.node},{row.offset_to_real_ns},"
                f"{row.goff_ns},{row.applied_global_ns},{row.applied_local_ns},"
                f"{row.reachable_peers}\n"
            )
