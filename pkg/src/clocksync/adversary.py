"""Attacker models: on-path asymmetric delay injection, Byzantine peer
response rewriting, and the transitive-corruption fixpoint analysis.

Delay attackers compromise ASes, not links: an AS adds its per-direction
asymmetry to every packet it forwards as a transit.  Compromised measurement
*targets* are the Byzantine peer model's job instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

ASYMMETRY_MIN_NS = 50_000_000  # 50 ms
ASYMMETRY_MAX_NS = 300_000_000  # 300 ms


@dataclass(frozen=True)
class AttackerAssignment:
    """Compromised ASes with their fixed per-run, per-direction delay
    injections.  `compromised` keeps sampling order so that growing the
    attacker fraction extends the set instead of resampling it."""

    n: int
    compromised: tuple[int, ...]
    asymmetry: Mapping[int, tuple[int, int]]  # as_id -> (ascending_ns, descending_ns)

    @property
    def compromised_set(self) -> frozenset[int]:
        return frozenset(self.compromised)


def sample_attackers(
    n: int,
    fraction: float,
    seed,
    asym_min_ns: int = ASYMMETRY_MIN_NS,
    asym_max_ns: int = ASYMMETRY_MAX_NS,
) -> AttackerAssignment:
    """Uniformly sample round(fraction*n) compromised ASes and their
    per-direction asymmetries (uniform integers in [asym_min, asym_max])."""
    if not (0.0 <= fraction <= 1.0):
        raise ValueError(f"attacker fraction out of range: {fraction}")
    count = round(fraction * n)
    return sample_attackers_by_count(n, count, seed, asym_min_ns, asym_max_ns)


def sample_attackers_by_count(
    n: int,
    count: int,
    seed,
    asym_min_ns: int = ASYMMETRY_MIN_NS,
    asym_max_ns: int = ASYMMETRY_MAX_NS,
) -> AttackerAssignment:
    """Like sample_attackers but with an explicit count.  For a fixed seed the
    sampled sets are nested in count (permutation prefixes), which makes
    corruption scans monotone per seed."""
    if not (0 <= count <= n):
        raise ValueError(f"attacker count out of range: {count} of {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    chosen = tuple(int(v) for v in perm[:count])
    asym = {
        v: (
            int(rng.integers(asym_min_ns, asym_max_ns + 1)),
            int(rng.integers(asym_min_ns, asym_max_ns + 1)),
        )
        for v in chosen
    }
    return AttackerAssignment(n=n, compromised=chosen, asymmetry=asym)


def injected_asymmetry_ns(
    path_nodes: Sequence[int], reverse: bool, assignment: AttackerAssignment
) -> int:
    """Extra one-way delay added by compromised transit ASes for a traversal
    of the path (reverse=True walks it backwards).  An AS's two directions are
    keyed by the orientation of its (previous, next) neighbors so that the
    response packet through the same border pair gets the other value."""
    seq = tuple(reversed(path_nodes)) if reverse else tuple(path_nodes)
    extra = 0
    for i in range(1, len(seq) - 1):
        pair = assignment.asymmetry.get(seq[i])
        if pair is not None:
            extra += pair[0] if seq[i - 1] < seq[i + 1] else pair[1]
    return extra


def inject_delay(
    delay_ns: int, path_nodes: Sequence[int], reverse: bool, assignment: AttackerAssignment
) -> int:
    """One-way delay after attacker injection; honest paths pass through."""
    return delay_ns + injected_asymmetry_ns(path_nodes, reverse, assignment)


# --------------------------------------------------------------------------
# Byzantine peers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantShift:
    shift_ns: int


@dataclass(frozen=True)
class RandomNoise:
    bound_ns: int


@dataclass(frozen=True)
class CollusivePull:
    """All colluders answer consistently with one fabricated clock running at
    true time + target_offset."""

    target_offset_ns: int


ByzantineStrategy = ConstantShift | RandomNoise | CollusivePull


def byzantine_peer_response(
    strategy: ByzantineStrategy,
    t1: int,
    t2: int,
    true_arrival: int,
    rng: Optional[np.random.Generator] = None,
) -> tuple[int, int]:
    """Rewrite a compromised responder's timestamps per strategy."""
    if isinstance(strategy, ConstantShift):
        return t1 + strategy.shift_ns, t2 + strategy.shift_ns
    if isinstance(strategy, RandomNoise):
        if rng is None:
            raise ValueError("RandomNoise needs a generator")
        e = int(rng.integers(-strategy.bound_ns, strategy.bound_ns + 1))
        return t1 + e, t2 + e
    if isinstance(strategy, CollusivePull):
        fabricated = true_arrival + strategy.target_offset_ns
        return fabricated, fabricated
    raise TypeError(f"unknown byzantine strategy: {strategy!r}")


# --------------------------------------------------------------------------
# Transitive corruption fixpoint
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorruptionResult:
    primary: frozenset[int]
    transitive: frozenset[int]
    iterations: int


class SelectedPathTable:
    """Per-pair selected paths packed as node bitmasks for fast scans.

    Rows are grouped by ordered pair (v-major, then w); `counts[v, w]` is the
    number of selected paths for that pair.
    """

    def __init__(self, n: int, selected: Mapping[tuple[int, int], Sequence[Sequence[int]]]):
        self.n = n
        self.words = (n + 63) // 64
        rows: list[np.ndarray] = []
        counts = np.zeros((n, n), dtype=np.int32)
        starts = np.zeros(n * n + 1, dtype=np.int64)
        flat = 0
        for v in range(n):
            for w in range(n):
                starts[v * n + w] = flat
                if v == w:
                    continue
                for path in selected.get((v, w), ()):
                    nodes = getattr(path, "nodes", path)
                    mask = np.zeros(self.words, dtype=np.uint64)
                    for node in nodes:
                        mask[node >> 6] |= np.uint64(1 << (node & 63))
                    rows.append(mask)
                    flat += 1
                counts[v, w] = flat - starts[v * n + w]
        starts[n * n] = flat
        self.path_words = (
            np.stack(rows) if rows else np.zeros((0, self.words), dtype=np.uint64)
        )
        self.pair_starts = starts
        self.counts = counts

    def majority_hit(self, member_mask: np.ndarray) -> np.ndarray:
        """Boolean (n, n): strict majority of the pair's selected paths
        contain a member of the masked set (as transit or endpoint)."""
        total = len(self.path_words)
        if total == 0:
            return np.zeros((self.n, self.n), dtype=bool)
        hit = (self.path_words & member_mask[None, :]).any(axis=1).astype(np.int64)
        starts = self.pair_starts[:-1]
        empty = starts == self.pair_starts[1:]
        per_pair = np.add.reduceat(hit, np.minimum(starts, total - 1))
        per_pair[empty] = 0
        hits = per_pair.reshape(self.n, self.n)
        return 2 * hits > self.counts

    def pack_members(self, members: Sequence[int]) -> np.ndarray:
        mask = np.zeros(self.words, dtype=np.uint64)
        for v in members:
            mask[v >> 6] |= np.uint64(1 << (v & 63))
        return mask


def corruption_fixpoint(
    n: int, majority: np.ndarray, primary: Sequence[int]
) -> CorruptionResult:
    """Iterate the corruption rule to stability.

    An input (v measures w) is corrupt when w is corrupted or when a strict
    majority of v's selected paths to w contain a primary attacker; v becomes
    corrupted once at least ceil(n/3) of its n inputs (the always-honest
    self-measurement included) are corrupt.
    """
    threshold = math.ceil(n / 3)
    corrupted = np.zeros(n, dtype=bool)
    corrupted[list(primary)] = True
    iterations = 0
    for _ in range(n + 1):
        inputs = majority | corrupted[None, :]
        np.fill_diagonal(inputs, False)
        new = corrupted | (inputs.sum(axis=1) >= threshold)
        if bool((new == corrupted).all()):
            break
        corrupted = new
        iterations += 1
    else:
        raise RuntimeError("corruption fixpoint failed to stabilize")
    return CorruptionResult(
        primary=frozenset(int(v) for v in primary),
        transitive=frozenset(int(v) for v in np.flatnonzero(corrupted)),
        iterations=iterations,
    )


def transitive_corruption(
    n: int,
    selected: Mapping[tuple[int, int], Sequence[Sequence[int]]],
    primary: Sequence[int],
) -> CorruptionResult:
    """Transitive-corruption analysis over precomputed per-pair selections."""
    table = SelectedPathTable(n, selected)
    majority = table.majority_hit(table.pack_members(primary))
    return corruption_fixpoint(n, majority, primary)
