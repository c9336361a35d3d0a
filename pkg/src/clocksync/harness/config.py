"""Scenario configuration: a flat key=value text format with command-line
overrides, validated against the protocol's input contract.

The serialized form is canonical (fixed key order, exact rationals), so
parse(serialize(config)) round-trips and the config hash is stable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Optional

from .. import clockcore as cc
from .. import netsim
from ..ftsync import ConfigurationError

REFERENCE_MODES = ("perfect", "bounded", "outage", "malicious_pull")
PATH_STRATEGIES = ("shortest", "disjoint", "random")
CORRECTION_RULES = ("cutoff", "analysis")
BYZANTINE_MODES = ("none", "constant_shift", "random_noise", "collusive_pull")
TOPOLOGY_SOURCES = ("generate", "file")


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunables of one scenario run.  Times are integer ns unless the
    field name says otherwise; x and y are exact rationals."""

    n: int = 50
    f: int = -1  # -1: resolve to floor((n-1)/3)
    attacker_fraction: float = 0.0
    path_strategy: str = "shortest"
    k: int = 5
    i_ns: int = cc.NS_PER_HOUR
    j_ns: int = cc.NS_PER_HOUR
    g_ns: int = 1_000_000  # 1 ms global cutoff
    x: Fraction = Fraction(5, 4)
    y: Fraction = Fraction(5, 2)
    max_drift_ns_per_day: int = 27_000  # rho_max; theta-1 = rho_max
    horizon_days: int = 40
    reference: str = "perfect"
    reference_error_ns: int = 100
    outage_days: str = ""  # e.g. "100-200" or "0-365,400-401" (half-open days)
    malicious_pull_ns: int = 1_000_000_000
    correction_rule: str = "cutoff"
    delta_ns: int = 0
    seed: int = 0
    topology_source: str = "generate"
    topology_file: str = ""
    attach_m: int = 3
    hop_limit: int = 5
    path_cap: int = 60
    hop_fixed_ns: int = 1_000
    hop_jitter_ns: int = 1_000
    drop_prob: float = 0.0
    timeout_factor: int = 4
    sample_interval_hours: int = 1
    sync_threshold_ns: int = 10_000
    byzantine: str = "none"
    byzantine_param_ns: int = 0
    asym_min_ns: int = 50_000_000
    asym_max_ns: int = 300_000_000

    def __post_init__(self) -> None:
        if self.f < 0:
            object.__setattr__(self, "f", (self.n - 1) // 3)

    # ------------------------------------------------------------ validation

    def validate(self) -> None:
        sim = self.to_sim_config()
        sim.validate()  # SyncParams invariants, rule/delta coupling, horizon
        if not (0.0 <= self.attacker_fraction <= 1 / 3 + 1e-12):
            raise ConfigurationError(
                f"attacker_fraction must be within [0, 1/3] for protocol runs, "
                f"got {self.attacker_fraction}"
            )
        if self.path_strategy not in PATH_STRATEGIES:
            raise ConfigurationError(f"unknown path_strategy {self.path_strategy!r}")
        if self.reference not in REFERENCE_MODES:
            raise ConfigurationError(f"unknown reference mode {self.reference!r}")
        if self.reference == "outage" and not self.outage_intervals_days():
            raise ConfigurationError("reference=outage requires outage_days intervals")
        if self.byzantine not in BYZANTINE_MODES:
            raise ConfigurationError(f"unknown byzantine mode {self.byzantine!r}")
        if self.topology_source not in TOPOLOGY_SOURCES:
            raise ConfigurationError(f"unknown topology_source {self.topology_source!r}")
        if self.topology_source == "file" and not self.topology_file:
            raise ConfigurationError("topology_source=file requires topology_file")
        if self.horizon_days < 1:
            raise ConfigurationError("horizon_days must be at least 1")
        if self.sample_interval_hours < 1:
            raise ConfigurationError("sample_interval_hours must be at least 1")
        if not (0 < self.asym_min_ns <= self.asym_max_ns):
            raise ConfigurationError("attacker asymmetry range is empty or non-positive")
        for start, end in self.outage_intervals_days():
            if not (0 <= start < end <= self.horizon_days):
                raise ConfigurationError(
                    f"outage interval {start}-{end} outside horizon 0-{self.horizon_days}"
                )

    # ------------------------------------------------------------- derived

    @property
    def horizon_ns(self) -> int:
        return self.horizon_days * cc.NS_PER_DAY

    @property
    def sample_interval_ns(self) -> int:
        return self.sample_interval_hours * cc.NS_PER_HOUR

    def outage_intervals_days(self) -> tuple[tuple[int, int], ...]:
        if not self.outage_days.strip():
            return ()
        out = []
        for part in self.outage_days.split(","):
            piece = part.strip()
            try:
                a, b = piece.split("-")
                out.append((int(a), int(b)))
            except ValueError:
                raise ConfigurationError(f"bad outage interval {piece!r}; expected A-B")
        return tuple(out)

    def reference_factory(self):
        mode = self.reference
        if mode == "perfect":
            return lambda _v: cc.Perfect()
        if mode == "bounded":
            eps = self.reference_error_ns
            return lambda _v: cc.BoundedError(epsilon_ns=eps)
        if mode == "outage":
            intervals = tuple(
                (s * cc.NS_PER_DAY, e * cc.NS_PER_DAY) for s, e in self.outage_intervals_days()
            )
            return lambda _v: cc.Outage(intervals=intervals)
        if mode == "malicious_pull":
            pull = self.malicious_pull_ns

            def factory(v: int) -> cc.Malicious:
                sign = 1 if v % 2 == 0 else -1
                return cc.Malicious(offset_fn=lambda _t, s=sign: s * pull)

            return factory
        raise ConfigurationError(f"unknown reference mode {mode!r}")

    def byzantine_strategy(self):
        from .. import adversary as adv

        if self.byzantine == "none":
            return None
        if self.byzantine == "constant_shift":
            return adv.ConstantShift(self.byzantine_param_ns)
        if self.byzantine == "random_noise":
            return adv.RandomNoise(self.byzantine_param_ns)
        if self.byzantine == "collusive_pull":
            return adv.CollusivePull(self.byzantine_param_ns)
        raise ConfigurationError(f"unknown byzantine mode {self.byzantine!r}")

    def to_sim_config(self) -> netsim.SimConfig:
        return netsim.SimConfig(
            n=self.n,
            f=self.f,
            i_ns=self.i_ns,
            j_ns=self.j_ns,
            g_ns=self.g_ns,
            x=self.x,
            y=self.y,
            rho_max_ns_per_day=self.max_drift_ns_per_day,
            horizon_ns=self.horizon_ns,
            seed=self.seed,
            correction_rule=self.correction_rule,
            delta_ns=self.delta_ns or None,
            reference_factory=self.reference_factory(),
            path_strategy=self.path_strategy,
            k=self.k,
            hop_limit=self.hop_limit,
            path_cap=self.path_cap,
            delay=netsim.DelayModel(
                hop_fixed_ns=self.hop_fixed_ns,
                hop_jitter_ns=self.hop_jitter_ns,
                drop_prob=self.drop_prob,
            ),
            timeout_factor=self.timeout_factor,
            sample_interval_ns=self.sample_interval_ns,
            byzantine=self.byzantine_strategy(),
        )


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

_PARSERS = {
    int: int,
    float: float,
    str: str,
    Fraction: Fraction,
}


def serialize_config(config: ScenarioConfig) -> str:
    lines = []
    for fld in fields(ScenarioConfig):
        value = getattr(config, fld.name)
        lines.append(f"{fld.name} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode("utf-8")).hexdigest()


def parse_config_text(text: str, overrides: Optional[dict[str, str]] = None) -> ScenarioConfig:
    known = {fld.name: fld.type for fld in fields(ScenarioConfig)}
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"config line {lineno}: expected key = value, got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        raw[key] = value
    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigurationError(f"override: unknown key {key!r}")
        raw[key] = value

    kwargs = {}
    hints = {
        fld.name: (_PARSERS[type(fld.default)] if not isinstance(fld.default, str) else str)
        for fld in fields(ScenarioConfig)
    }
    for key, value in raw.items():
        parser = hints[key]
        try:
            kwargs[key] = parser(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"config key {key}: cannot parse {value!r}: {exc}")
    return ScenarioConfig(**kwargs)


def load_config(path: str, overrides: Optional[dict[str, str]] = None) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides)


def save_config(config: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_config(config))
