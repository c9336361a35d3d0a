"""Scenario execution: builds topology and attackers from the seeded config,
runs the simulator, writes the trace/metrics/summary files, and drives the
corruption scan and the desk-scale experiment recipes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import adversary as adv
from .. import netsim
from .. import topo as topo_mod
from . import bounds as bounds_mod
from . import metrics as metrics_mod
from .config import ScenarioConfig, config_hash, serialize_config

VERSION = "0.1.0"
SCALE_NOTE = (
    "desk-scale run (tens to hundreds of nodes); full-scale results use "
    "500-2000 AS topologies and are comparable only qualitatively"
)


@dataclass
class RunResult:
    config: ScenarioConfig
    trace: netsim.Trace
    metrics: metrics_mod.RunMetrics
    checks: list[bounds_mod.CheckResult]
    outdir: Optional[Path]


def build_topology(config: ScenarioConfig) -> tuple[topo_mod.Topology, list[str]]:
    """Topology per config: generated from the run's topology stream, or
    loaded from a file (with any warnings propagated)."""
    if config.topology_source == "file":
        return topo_mod.load_topology(config.topology_file)
    topo_ss, _, _, _, _ = netsim._rng_streams(config.seed)
    topology = topo_mod.generate_topology(config.n, topo_ss, attach_m=config.attach_m)
    return topology, []


def build_attackers(config: ScenarioConfig) -> adv.AttackerAssignment:
    _, attacker_ss, _, _, _ = netsim._rng_streams(config.seed)
    count = round(config.attacker_fraction * config.n)
    return adv.sample_attackers_by_count(
        config.n, count, attacker_ss, config.asym_min_ns, config.asym_max_ns
    )


def run(
    config: ScenarioConfig,
    outdir: Optional[str] = None,
    check: bool = False,
    topology: Optional[topo_mod.Topology] = None,
    path_cache: Optional[dict] = None,
) -> RunResult:
    """Execute one scenario; optionally write the output files and run the
    formal-bound checks.  Identical (config, seed) yield identical bytes."""
    config.validate()
    warnings: list[str] = []
    if topology is None:
        topology, warnings = build_topology(config)
    attackers = build_attackers(config)
    trace = netsim.run_scenario(config.to_sim_config(), topology, attackers, path_cache)
    metrics = metrics_mod.compute_metrics(trace.rows, config.sync_threshold_ns)
    checks = bounds_mod.check_bounds(trace.rows, config) if check else []

    out_path: Optional[Path] = None
    if outdir is not None:
        out_path = Path(outdir)
        out_path.mkdir(parents=True, exist_ok=True)
        netsim.write_trace_csv(trace, str(out_path / "trace.csv"))
        metrics_mod.write_metrics_csv(metrics, str(out_path / "metrics.csv"))
        metrics_mod.write_cdf_csv(metrics, str(out_path / "cdf.csv"))
        metrics_mod.write_summary(metrics, str(out_path / "summary.txt"), SCALE_NOTE)
        _write_meta(config, warnings, trace, out_path / "meta.txt")
        if check:
            with open(out_path / "checks.txt", "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(bounds_mod.report_lines(checks)) + "\n")
    return RunResult(config=config, trace=trace, metrics=metrics, checks=checks, outdir=out_path)


def availability_run(
    config: ScenarioConfig,
    outdir: Optional[str] = None,
    check: bool = False,
    topology: Optional[topo_mod.Topology] = None,
    path_cache: Optional[dict] = None,
) -> RunResult:
    """A standard run whose config must schedule a reference outage; metrics
    then include the free-drift / controlled-drift phase boundary."""
    if config.reference != "outage":
        raise ValueError("availability_run requires reference=outage")
    return run(config, outdir, check, topology, path_cache)


def _write_meta(config, warnings, trace, path: Path) -> None:
    lines = [
        f"version={VERSION}",
        f"config_hash={config_hash(config)}",
        f"seed={config.seed}",
    ]
    lines += [f"config.{line}" for line in serialize_config(config).splitlines()]
    lines += [f"warning={w}" for w in warnings]
    lines += [f"meta.{k}={v}" for k, v in sorted(trace.meta.items())]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Corruption scan
# --------------------------------------------------------------------------

SCAN_HEADER = "primary_count,transitive_count,seed,strategy,k"


def corruption_scan(
    config: ScenarioConfig,
    counts: Sequence[int],
    reps: int = 20,
    allow_over_third: bool = False,
    topology: Optional[topo_mod.Topology] = None,
    path_cache: Optional[dict] = None,
) -> list[tuple[int, int, int, str, int]]:
    """Transitive-corruption scan over attacker counts.

    The topology and path selection come from the config (one fixed topology
    per scan); each repetition draws one node permutation, whose prefixes
    form the nested primary sets for every count, keeping each repetition
    monotone in the count.
    """
    limit = config.n // 3
    if not allow_over_third and any(c > limit for c in counts):
        raise ValueError(
            f"counts beyond floor(n/3)={limit} must be explicitly allowed"
        )
    if any(c < 0 or c > config.n for c in counts):
        raise ValueError("scan counts out of range")
    if topology is None:
        topology, _ = build_topology(config)
    if path_cache is None:
        path_cache = topo_mod.build_path_cache(topology, config.hop_limit, config.path_cap)
    _, _, _, select_ss, _ = netsim._rng_streams(config.seed)
    selected = topo_mod.select_all_pairs(
        topology, path_cache, config.path_strategy, config.k,
        np.random.default_rng(select_ss),
    )
    table = adv.SelectedPathTable(config.n, selected)

    rows: list[tuple[int, int, int, str, int]] = []
    for rep in range(reps):
        rep_rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, 0x5CA4, rep))
        )
        perm = [int(v) for v in rep_rng.permutation(config.n)]
        for count in counts:
            primary = perm[:count]
            majority = table.majority_hit(table.pack_members(primary))
            result = adv.corruption_fixpoint(config.n, majority, primary)
            rows.append(
                (count, len(result.transitive), rep, config.path_strategy, config.k)
            )
    return rows


def write_scan_csv(rows: Sequence[tuple[int, int, int, str, int]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SCAN_HEADER + "\n")
        for count, transitive, seed, strategy, k in rows:
            fh.write(f"{count},{transitive},{seed},{strategy},{k}\n")


# --------------------------------------------------------------------------
# Desk-scale experiment recipes
# --------------------------------------------------------------------------


def recipe_good_reference_skew() -> ScenarioConfig:
    """Honest network, perfect references; the skew envelope must hold."""
    return ScenarioConfig(n=20, seed=20, horizon_days=40)


def recipe_worst_case_skew() -> ScenarioConfig:
    """Adversarial references pulling the two node halves apart at full cap,
    contained by the analysis-variant correction rule."""
    return ScenarioConfig(
        n=10,
        seed=10,
        horizon_days=40,
        reference="malicious_pull",
        correction_rule="analysis",
        delta_ns=50_000,
    )


def recipe_availability() -> ScenarioConfig:
    """Full-horizon reference outage: one year with no external references."""
    return ScenarioConfig(
        n=50,
        seed=50,
        horizon_days=365,
        reference="outage",
        outage_days="0-365",
        sample_interval_hours=24,
    )


def recipe_recovery() -> ScenarioConfig:
    """References disappear on day 100 and return on day 200.  The horizon
    extends past one year so a slow reconvergence still completes on-trace
    and can be reported precisely."""
    return ScenarioConfig(
        n=50,
        seed=51,
        horizon_days=380,
        reference="outage",
        outage_days="100-200",
        sample_interval_hours=24,
    )


# The 200-node experiments model the top-degree core ASes, which are far
# denser than a default preferential-attachment graph: attach_m=18 gives a
# mean degree around 35 (diameter 3) so that five shortest paths actually
# diversify over distinct transits, as in the full-scale topology.
DENSE_CORE_ATTACH_M = 18


def recipe_reliability(attacker_fraction: float, seed: int) -> ScenarioConfig:
    """On-path delay attackers on the 200-node topology, five shortest paths."""
    return ScenarioConfig(
        n=200,
        seed=seed,
        horizon_days=40,
        attacker_fraction=attacker_fraction,
        path_strategy="shortest",
        k=5,
        attach_m=DENSE_CORE_ATTACH_M,
        sample_interval_hours=24,
    )


def recipe_scan(k: int) -> ScenarioConfig:
    return ScenarioConfig(
        n=200, seed=200, path_strategy="shortest", k=k, attach_m=DENSE_CORE_ATTACH_M
    )
