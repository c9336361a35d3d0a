"""AS-level topology: graph representation, loop-free path discovery with hop
and cache limits, the three path-selection strategies, plus synthetic
generation and text-file ingestion.

Determinism rules used throughout: adjacency is kept sorted, discovered paths
are ordered shortest-first with lexicographic (node sequence, link indices)
tie-breaking, and all randomness flows through an injected numpy Generator.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

SPEED_OF_LIGHT_M_PER_S = 299_792_458
EARTH_RADIUS_M = 6_371_000.0
# Signal propagation at 2/3 c in fiber; 1 m of fiber between co-located routers.
FIBER_NS_PER_M = 3e9 / (2 * SPEED_OF_LIGHT_M_PER_S)
MIN_LINK_M = 1.0

DEFAULT_HOP_LIMIT = 5
DEFAULT_PATH_CAP = 60


class TopologyError(ValueError):
    """Malformed topology input or infeasible generation parameters."""


@dataclass(frozen=True)
class Path:
    """Loop-free route: node ids v0..vk and the link index taken at each hop."""

    nodes: tuple[int, ...]
    links: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 2 or len(self.links) != len(self.nodes) - 1:
            raise TopologyError(f"inconsistent path shape: {self.nodes} / {self.links}")
        if len(set(self.nodes)) != len(self.nodes):
            raise TopologyError(f"path revisits a node: {self.nodes}")
        if len(set(self.links)) != len(self.links):
            raise TopologyError(f"path revisits a link: {self.links}")

    @property
    def hops(self) -> int:
        return len(self.links)

    @property
    def internal(self) -> tuple[int, ...]:
        return self.nodes[1:-1]

    def sort_key(self) -> tuple:
        return (self.hops, self.nodes, self.links)


@dataclass(frozen=True)
class PathSet:
    """Cached paths for one (src, dst) pair, shortest-first, deterministic."""

    src: int
    dst: int
    paths: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class Topology:
    """Undirected multigraph of ASes.  Links carry positive propagation
    latencies (ns) and are identified by their stable index."""

    n: int
    links: tuple[tuple[int, int, int], ...]  # (a, b, latency_ns)
    coords: Optional[tuple[tuple[float, float], ...]] = None  # (lat, lon) degrees

    def __post_init__(self) -> None:
        if self.n < 1:
            raise TopologyError(f"topology needs at least one node, got n={self.n}")
        for a, b, lat in self.links:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise TopologyError(f"link endpoint out of range: ({a}, {b})")
            if a == b:
                raise TopologyError(f"self-loop at node {a}")
            if lat <= 0:
                raise TopologyError(f"link ({a}, {b}) has non-positive latency {lat}")
        if self.coords is not None and len(self.coords) != self.n:
            raise TopologyError("coordinate count does not match node count")

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per node: (neighbor, link_index) pairs, sorted for determinism."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for idx, (a, b, _lat) in enumerate(self.links):
            adj[a].append((b, idx))
            adj[b].append((a, idx))
        return tuple(tuple(sorted(entries)) for entries in adj)

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(v for v, _ in entries) for entries in self.adjacency)

    def link_latency(self, link_idx: int) -> int:
        return self.links[link_idx][2]

    def path_latency(self, path: Path) -> int:
        return sum(self.links[li][2] for li in path.links)

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = self.bfs_hops(0)
        return int(seen.max()) < self.n + 1

    def bfs_hops(self, root: int) -> np.ndarray:
        """Hop distances from root; unreachable nodes get n+1."""
        dist = np.full(self.n, self.n + 1, dtype=np.int32)
        dist[root] = 0
        queue = deque([root])
        neigh = self.neighbor_sets
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for v in neigh[u]:
                if dist[v] > du:
                    dist[v] = du
                    queue.append(v)
        return dist

    def all_pairs_hops(self) -> np.ndarray:
        return np.stack([self.bfs_hops(v) for v in range(self.n)])


# --------------------------------------------------------------------------
# Path discovery
# --------------------------------------------------------------------------


def discover_paths(
    topology: Topology,
    src: int,
    dst: int,
    hop_limit: int = DEFAULT_HOP_LIMIT,
    cap: int = DEFAULT_PATH_CAP,
    dist_to_dst: Optional[np.ndarray] = None,
) -> PathSet:
    """Enumerate loop-free paths src->dst up to hop_limit, shortest-first with
    lexicographic tie-breaking, truncated at cap.  Disconnected pairs (within
    the hop limit) yield an empty set."""
    if src == dst:
        raise TopologyError("path discovery needs distinct endpoints")
    if not (0 <= src < topology.n and 0 <= dst < topology.n):
        raise TopologyError(f"endpoint out of range: ({src}, {dst})")
    if dist_to_dst is None:
        dist_to_dst = topology.bfs_hops(dst)
    if dist_to_dst[src] > hop_limit:
        return PathSet(src, dst, ())

    adj = topology.adjacency
    found: list[Path] = []
    for length in range(int(dist_to_dst[src]), hop_limit + 1):
        quota = cap - len(found)
        if quota <= 0:
            break
        found.extend(_paths_of_length(adj, dist_to_dst, src, dst, length, quota))
    return PathSet(src, dst, tuple(found))


def _paths_of_length(adj, dist_to_dst, src, dst, length, quota) -> list[Path]:
    """Exact-length DFS in adjacency (lex) order, pruned by remaining distance;
    emits at most `quota` paths.  Lex emission order makes truncation exact."""
    out: list[Path] = []
    nodes = [src]
    links: list[int] = []
    on_path = {src}

    def rec(u: int, remaining: int) -> bool:
        for v, li in adj[u]:
            if v == dst:
                if remaining == 1:
                    out.append(Path(tuple(nodes) + (dst,), tuple(links) + (li,)))
                    if len(out) >= quota:
                        return False
                continue
            if remaining <= 1 or v in on_path or dist_to_dst[v] > remaining - 1:
                continue
            nodes.append(v)
            links.append(li)
            on_path.add(v)
            keep_going = rec(v, remaining - 1)
            nodes.pop()
            links.pop()
            on_path.remove(v)
            if not keep_going:
                return False
        return True

    rec(src, length)
    return out


def build_path_cache(
    topology: Topology, hop_limit: int = DEFAULT_HOP_LIMIT, cap: int = DEFAULT_PATH_CAP
) -> dict[tuple[int, int], PathSet]:
    """Discover paths for every ordered pair, sharing one BFS per destination."""
    cache: dict[tuple[int, int], PathSet] = {}
    for dst in range(topology.n):
        dist = topology.bfs_hops(dst)
        for src in range(topology.n):
            if src != dst:
                cache[(src, dst)] = discover_paths(
                    topology, src, dst, hop_limit, cap, dist_to_dst=dist
                )
    return cache


# --------------------------------------------------------------------------
# Selection strategies
# --------------------------------------------------------------------------


def select_shortest(pathset: PathSet, k: int) -> list[Path]:
    """First min(k, |pathset|) entries of the shortest-first order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return list(pathset.paths[:k])


def select_disjoint(pathset: PathSet, k: int) -> list[Path]:
    """Greedy: shortest path first, then repeatedly the path adding the most
    not-yet-used internal ASes (ties: shorter, then lexicographic).
    Disjointness is maximized, not required."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not pathset.paths:
        return []
    remaining = list(pathset.paths)
    selected = [remaining.pop(0)]
    used: set[int] = set(selected[0].internal)
    while remaining and len(selected) < k:
        best_i = min(
            range(len(remaining)),
            key=lambda i: (
                -len(set(remaining[i].internal) - used),
                remaining[i].sort_key(),
            ),
        )
        chosen = remaining.pop(best_i)
        selected.append(chosen)
        used.update(chosen.internal)
    return selected


def select_random(pathset: PathSet, k: int, rng: np.random.Generator) -> list[Path]:
    """Uniform sample without replacement from the cached set."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    count = len(pathset.paths)
    if count == 0:
        return []
    take = min(k, count)
    idx = rng.choice(count, size=take, replace=False)
    return [pathset.paths[int(i)] for i in idx]


def select_paths(
    pathset: PathSet, strategy: str, k: int, rng: Optional[np.random.Generator] = None
) -> list[Path]:
    """Apply a named strategy; neighboring ASes always use the single shortest
    path, so callers pass k=1 for adjacent pairs."""
    if strategy == "shortest":
        return select_shortest(pathset, k)
    if strategy == "disjoint":
        return select_disjoint(pathset, k)
    if strategy == "random":
        if rng is None:
            raise ValueError("random selection requires a generator")
        return select_random(pathset, k, rng)
    raise ValueError(f"unknown path strategy: {strategy!r}")


def select_all_pairs(
    topology: Topology,
    cache: dict[tuple[int, int], PathSet],
    strategy: str,
    k: int,
    rng: Optional[np.random.Generator] = None,
) -> dict[tuple[int, int], list[Path]]:
    """Selection for every ordered pair in a fixed (v, w)-ascending order so
    the random strategy consumes its stream reproducibly.  Adjacent pairs use
    the single shortest path regardless of strategy."""
    selected: dict[tuple[int, int], list[Path]] = {}
    for v in range(topology.n):
        for w in range(topology.n):
            if v == w:
                continue
            kk = 1 if w in topology.neighbor_sets[v] else k
            selected[(v, w)] = select_paths(cache[(v, w)], strategy, kk, rng)
    return selected


# --------------------------------------------------------------------------
# Synthetic generation
# --------------------------------------------------------------------------


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a spherical Earth."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def link_latency_ns(distance_m: float) -> int:
    """Propagation latency for a fiber of the given length (>= 1 m)."""
    return max(1, round(max(distance_m, MIN_LINK_M) * FIBER_NS_PER_M))


def generate_topology(
    n: int,
    seed,
    attach_m: int = 3,
    target_pct99_hops: int = DEFAULT_HOP_LIMIT,
    max_densify_rounds: int = 10_000,
) -> Topology:
    """Degree-weighted preferential-attachment graph, densified with extra
    degree-weighted shortcut edges until the 99th-percentile pairwise hop
    distance is within target.  Node coordinates are sampled uniformly on the
    sphere; link latency is great-circle distance at 2/3 c (>= 1 m fiber)."""
    if n < 4:
        raise TopologyError(f"generation needs n >= 4, got {n}")
    if attach_m < 1 or attach_m >= n:
        raise TopologyError(f"infeasible attachment count m={attach_m} for n={n}")
    rng = np.random.default_rng(seed)

    lon = rng.uniform(-180.0, 180.0, size=n)
    lat = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, size=n)))
    coords = tuple((float(lat[i]), float(lon[i])) for i in range(n))

    edges: set[tuple[int, int]] = set()
    degree = np.zeros(n, dtype=np.int64)

    def add_edge(a: int, b: int) -> None:
        a, b = (a, b) if a < b else (b, a)
        edges.add((a, b))
        degree[a] += 1
        degree[b] += 1

    m0 = attach_m + 1
    for a in range(m0):
        for b in range(a + 1, m0):
            add_edge(a, b)
    for v in range(m0, n):
        weights = degree[:v].astype(np.float64)
        targets = rng.choice(v, size=attach_m, replace=False, p=weights / weights.sum())
        for u in sorted(int(t) for t in targets):
            add_edge(v, u)

    def build() -> Topology:
        link_list = tuple(
            (a, b, link_latency_ns(haversine_m(*coords[a], *coords[b])))
            for a, b in sorted(edges)
        )
        return Topology(n=n, links=link_list, coords=coords)

    topo = build()
    for _ in range(max_densify_rounds):
        hops = topo.all_pairs_hops()
        iu = np.triu_indices(n, k=1)
        pairwise = hops[iu]
        pct99 = int(np.quantile(pairwise, 0.99, method="higher"))
        if pct99 <= target_pct99_hops and pairwise.max() <= n:
            break
        for _ in range(max(1, n // 20)):
            w = (degree + 1).astype(np.float64)
            for _attempt in range(64):
                a, b = rng.choice(n, size=2, replace=False, p=w / w.sum())
                a, b = int(a), int(b)
                key = (a, b) if a < b else (b, a)
                if key not in edges:
                    add_edge(a, b)
                    break
        topo = build()
    else:
        raise TopologyError("densification did not reach the distance target")
    return topo


# --------------------------------------------------------------------------
# File ingestion / serialization
# --------------------------------------------------------------------------


def serialize_topology(topology: Topology) -> str:
    """Edge-latency text form (stable byte-for-byte for equal topologies)."""
    lines = [f"# nodes: {topology.n}", f"# links: {len(topology.links)}"]
    lines += [f"{a} {b} {lat}" for a, b, lat in topology.links]
    return "\n".join(lines) + "\n"


def save_topology(topology: Topology, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_topology(topology))


def load_topology(path: str) -> tuple[Topology, list[str]]:
    """Parse a topology file.

    Two forms exist and must not be mixed:
      * edge rows ``src dst latency_ns`` (all integers), or
      * node rows ``nodeId lat lon`` followed by edge rows ``src dst``
        (latencies derived from great-circle distance).
    ``#`` starts a comment.  Returns (topology, warnings): a disconnected
    graph is a warning, not an error.
    """
    rows: list[tuple[int, list[str]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                rows.append((lineno, text.split()))
    if not rows:
        raise TopologyError(f"{path}: no topology rows found")

    has_two_token = any(len(tok) == 2 for _, tok in rows)
    if has_two_token:
        topo = _parse_coordinate_form(path, rows)
    else:
        topo = _parse_edge_latency_form(path, rows)
    warnings = []
    if not topo.is_connected():
        warnings.append("graph is disconnected")
    return topo, warnings


def _parse_int(path: str, lineno: int, token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise TopologyError(f"{path}:{lineno}: {what} must be an integer, got {token!r}")


def _require_dense_ids(path: str, ids: Iterable[int]) -> int:
    id_set = set(ids)
    n = max(id_set) + 1
    if id_set != set(range(n)):
        missing = sorted(set(range(n)) - id_set)
        raise TopologyError(f"{path}: node ids must be dense 0..{n - 1}; missing {missing}")
    return n


def _parse_edge_latency_form(path: str, rows) -> Topology:
    links = []
    ids: set[int] = set()
    for lineno, tok in rows:
        if len(tok) != 3:
            raise TopologyError(
                f"{path}:{lineno}: expected 'src dst latency_ns', got {' '.join(tok)!r}"
            )
        a = _parse_int(path, lineno, tok[0], "src id")
        b = _parse_int(path, lineno, tok[1], "dst id")
        lat = _parse_int(path, lineno, tok[2], "latency")
        if lat <= 0:
            raise TopologyError(f"{path}:{lineno}: latency must be positive, got {lat}")
        if a == b:
            raise TopologyError(f"{path}:{lineno}: self-loop at node {a}")
        links.append((a, b, lat))
        ids.update((a, b))
    n = _require_dense_ids(path, ids)
    return Topology(n=n, links=tuple(links))


def _parse_coordinate_form(path: str, rows) -> Topology:
    coords: dict[int, tuple[float, float]] = {}
    edge_rows: list[tuple[int, int, int]] = []
    for lineno, tok in rows:
        if len(tok) == 3:
            node = _parse_int(path, lineno, tok[0], "node id")
            try:
                lat, lon = float(tok[1]), float(tok[2])
            except ValueError:
                raise TopologyError(f"{path}:{lineno}: bad coordinate row {' '.join(tok)!r}")
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise TopologyError(
                    f"{path}:{lineno}: coordinates out of range (lat {lat}, lon {lon}); "
                    "explicit-latency edge rows may not be mixed with coordinate form"
                )
            if node in coords:
                raise TopologyError(f"{path}:{lineno}: duplicate coordinates for node {node}")
            coords[node] = (lat, lon)
        elif len(tok) == 2:
            a = _parse_int(path, lineno, tok[0], "src id")
            b = _parse_int(path, lineno, tok[1], "dst id")
            if a == b:
                raise TopologyError(f"{path}:{lineno}: self-loop at node {a}")
            edge_rows.append((lineno, a, b))
        else:
            raise TopologyError(f"{path}:{lineno}: unrecognized row {' '.join(tok)!r}")
    if not edge_rows:
        raise TopologyError(f"{path}: coordinate form has no edge rows")
    n = _require_dense_ids(path, coords.keys())
    links = []
    for lineno, a, b in edge_rows:
        if not (0 <= a < n and 0 <= b < n):
            raise TopologyError(f"{path}:{lineno}: edge endpoint {max(a, b)} has no coordinates")
        dist = haversine_m(*coords[a], *coords[b])
        links.append((a, b, link_latency_ns(dist)))
    coord_tuple = tuple(coords[i] for i in range(n))
    return Topology(n=n, links=tuple(links), coords=coord_tuple)
