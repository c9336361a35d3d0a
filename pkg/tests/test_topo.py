"""Topology representation, path discovery/selection, generation, ingestion."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clocksync import topo
from clocksync.topo import (
    Path,
    PathSet,
    Topology,
    TopologyError,
    build_path_cache,
    discover_paths,
    generate_topology,
    haversine_m,
    link_latency_ns,
    load_topology,
    save_topology,
    select_disjoint,
    select_random,
    select_shortest,
    serialize_topology,
)


def simple_topology(n, edges):
    return Topology(n=n, links=tuple((a, b, 1000) for a, b in edges))


def brute_force_paths(topology, src, dst, hop_limit):
    """Exhaustive simple-path enumeration, independent of the DFS pruning."""
    found = []

    def extend(seq, used_links):
        u = seq[-1]
        if u == dst:
            links = tuple(used_links)
            found.append(Path(tuple(seq), links))
            return
        if len(seq) - 1 >= hop_limit:
            return
        for v, li in topology.adjacency[u]:
            if v not in seq and li not in used_links:
                extend(seq + [v], used_links + [li])

    extend([src], [])
    return sorted(found, key=lambda p: p.sort_key())


class TestPathType:
    def test_rejects_node_repeat(self):
        with pytest.raises(TopologyError):
            Path((0, 1, 0), (0, 1))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(TopologyError):
            Path((0, 1, 2), (0,))


class TestDiscoverPaths:
    def test_triangle(self):
        t = simple_topology(3, [(0, 1), (0, 2), (1, 2)])
        ps = discover_paths(t, 0, 1)
        assert [p.nodes for p in ps.paths] == [(0, 1), (0, 2, 1)]

    def test_line_beyond_hop_limit(self):
        t = simple_topology(7, [(i, i + 1) for i in range(6)])
        assert discover_paths(t, 0, 6, hop_limit=5).paths == ()

    def test_complete_graph_direct_edge_first(self):
        t = simple_topology(5, list(itertools.combinations(range(5), 2)))
        for src, dst in itertools.permutations(range(5), 2):
            ps = discover_paths(t, src, dst)
            assert ps.paths[0].nodes == (src, dst)
            assert ps.paths == tuple(brute_force_paths(t, src, dst, 5)[:60])

    def test_cap_truncates_shortest_first(self):
        t = simple_topology(5, list(itertools.combinations(range(5), 2)))
        ps = discover_paths(t, 0, 1, cap=4)
        full = brute_force_paths(t, 0, 1, 5)
        assert ps.paths == tuple(full[:4])

    def test_same_endpoints_rejected(self):
        t = simple_topology(3, [(0, 1), (1, 2)])
        with pytest.raises(TopologyError):
            discover_paths(t, 1, 1)

    def test_disconnected_pair_empty(self):
        t = simple_topology(4, [(0, 1), (2, 3)])
        assert discover_paths(t, 0, 3).paths == ()

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_matches_exhaustive_enumeration(self, data):
        n = data.draw(st.integers(3, 6))
        possible = list(itertools.combinations(range(n), 2))
        edges = data.draw(st.sets(st.sampled_from(possible), min_size=2, max_size=len(possible)))
        t = simple_topology(n, sorted(edges))
        src = data.draw(st.integers(0, n - 1))
        dst = data.draw(st.integers(0, n - 1).filter(lambda d: d != src))
        ps = discover_paths(t, src, dst)
        expected = brute_force_paths(t, src, dst, 5)[:60]
        assert list(ps.paths) == expected
        for path in ps.paths:
            assert len(set(path.nodes)) == len(path.nodes)

    def test_parallel_links_ordered_by_index(self):
        t = Topology(n=2, links=((0, 1, 500), (0, 1, 900)))
        ps = discover_paths(t, 0, 1)
        assert [(p.nodes, p.links) for p in ps.paths] == [((0, 1), (0,)), ((0, 1), (1,))]


class TestSelection:
    def _pathset(self):
        t = simple_topology(5, list(itertools.combinations(range(5), 2)))
        return discover_paths(t, 0, 1)

    def test_shortest_k1(self):
        ps = self._pathset()
        assert [p.nodes for p in select_shortest(ps, 1)] == [(0, 1)]

    def test_shortest_k_beyond_size(self):
        ps = PathSet(0, 1, self._pathset().paths[:3])
        assert len(select_shortest(ps, 5)) == 3

    def test_selection_subset_and_ordering(self):
        ps = self._pathset()
        chosen = select_shortest(ps, 4)
        assert all(c in ps.paths for c in chosen)
        hops = [c.hops for c in chosen]
        assert hops == sorted(hops)

    def test_disjoint_diamond(self):
        t = simple_topology(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        ps = discover_paths(t, 0, 3)
        chosen = select_disjoint(ps, 2)
        assert [c.nodes for c in chosen] == [(0, 1, 3), (0, 2, 3)]

    def test_disjoint_first_pick_is_shortest(self):
        ps = self._pathset()
        assert select_disjoint(ps, 3)[0] == select_shortest(ps, 1)[0]

    def test_disjoint_proceeds_when_overlap_forced(self):
        # All two-hop paths share transit 2; selection still fills k.
        t = simple_topology(4, [(0, 2), (2, 1), (3, 2)])
        ps = discover_paths(t, 0, 1)
        assert len(select_disjoint(ps, 2)) == min(2, len(ps.paths))

    def test_empty_pathset(self):
        empty = PathSet(0, 1, ())
        assert select_shortest(empty, 3) == []
        assert select_disjoint(empty, 3) == []
        assert select_random(empty, 3, np.random.default_rng(0)) == []

    def test_random_whole_set_when_k_large(self):
        ps = self._pathset()
        chosen = select_random(ps, len(ps.paths) + 5, np.random.default_rng(0))
        assert sorted(p.sort_key() for p in chosen) == [p.sort_key() for p in ps.paths]

    def test_random_deterministic_for_seed(self):
        ps = self._pathset()
        a = select_random(ps, 3, np.random.default_rng(42))
        b = select_random(ps, 3, np.random.default_rng(42))
        assert a == b

    def test_random_uniformity_chi_square(self):
        # 10^4 single draws over a 10-path set: every path within 3 sigma.
        ps = PathSet(0, 1, self._pathset().paths[:10])
        assert len(ps.paths) == 10
        rng = np.random.default_rng(7)
        counts = {p.sort_key(): 0 for p in ps.paths}
        for _ in range(10_000):
            counts[select_random(ps, 1, rng)[0].sort_key()] += 1
        sigma = (10_000 * 0.1 * 0.9) ** 0.5
        for c in counts.values():
            assert abs(c - 1000) <= 3 * sigma


class TestGeneration:
    def test_minimum_size_connected(self):
        t = generate_topology(4, seed=0)
        assert t.is_connected()

    def test_deterministic_bytes(self):
        a = serialize_topology(generate_topology(30, seed=5))
        b = serialize_topology(generate_topology(30, seed=5))
        assert a == b

    def test_different_seed_differs(self):
        a = serialize_topology(generate_topology(30, seed=5))
        b = serialize_topology(generate_topology(30, seed=6))
        assert a != b

    def test_rejects_tiny(self):
        with pytest.raises(TopologyError):
            generate_topology(3, seed=0)

    def test_default_200_diameter_within_hop_limit(self):
        t = generate_topology(200, seed=0)
        hops = t.all_pairs_hops()
        assert int(hops.max()) <= 5

    def test_latencies_positive_and_physical(self):
        t = generate_topology(50, seed=1)
        for _a, _b, lat in t.links:
            assert lat >= 5  # >= 1 m of fiber
            assert lat < 110_000_000  # below antipodal great-circle latency


class TestFileFormats:
    def test_edge_latency_form(self, tmp_path):
        p = tmp_path / "topo.txt"
        p.write_text("# demo\n0 1 5000000\n1 2 7000000\n")
        t, warnings = load_topology(str(p))
        assert t.n == 3
        assert t.links == ((0, 1, 5_000_000), (1, 2, 7_000_000))
        assert warnings == []

    def test_coordinate_form_against_known_city_pair(self, tmp_path):
        # Zurich to Geneva is ~224 km great circle; at 2/3 c that is ~1.12 ms.
        p = tmp_path / "topo.txt"
        p.write_text("0 47.3769 8.5417\n1 46.2044 6.1432\n2 47.3770 8.5418\n0 1\n1 2\n0 2\n")
        t, _ = load_topology(str(p))
        zrh_gva = t.links[0][2]
        expected = 224_000 * 5.003_46  # meters times ns-per-meter at 2/3 c
        assert abs(zrh_gva - expected) / expected < 0.02

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "topo.txt"
        p.write_text("# only comments\n\n")
        with pytest.raises(TopologyError):
            load_topology(str(p))

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "topo.txt"
        p.write_text("0 1 5000\nbroken line here\n")
        with pytest.raises(TopologyError, match="topo.txt:2"):
            load_topology(str(p))

    def test_mixed_forms_rejected(self, tmp_path):
        # A 2-token edge row switches to coordinate form, making the explicit
        # latency row an invalid coordinate row.
        p = tmp_path / "topo.txt"
        p.write_text("0 47.0 8.0\n1 46.0 7.0\n0 1\n0 1 5000000\n")
        with pytest.raises(TopologyError, match="out of range"):
            load_topology(str(p))

    def test_non_dense_ids_rejected(self, tmp_path):
        p = tmp_path / "topo.txt"
        p.write_text("0 2 5000\n")
        with pytest.raises(TopologyError, match="dense"):
            load_topology(str(p))

    def test_disconnected_yields_warning(self, tmp_path):
        p = tmp_path / "topo.txt"
        p.write_text("0 1 5000\n2 3 5000\n")
        t, warnings = load_topology(str(p))
        assert not t.is_connected()
        assert any("disconnected" in w for w in warnings)

    def test_save_load_round_trip(self, tmp_path):
        t = generate_topology(12, seed=3)
        p = tmp_path / "gen.txt"
        save_topology(t, str(p))
        loaded, warnings = load_topology(str(p))
        assert warnings == []
        assert loaded.links == t.links
        assert loaded.n == t.n

    def test_haversine_zero(self):
        assert haversine_m(10.0, 20.0, 10.0, 20.0) == 0.0
        assert link_latency_ns(0.0) == 5  # co-located pair, 1 m fiber


class TestPathCache:
    def test_cache_matches_pairwise_discovery(self):
        t = generate_topology(10, seed=2)
        cache = build_path_cache(t)
        for (src, dst), ps in list(cache.items())[:20]:
            assert ps.paths == discover_paths(t, src, dst).paths
        assert len(cache) == 10 * 9
