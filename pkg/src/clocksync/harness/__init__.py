from .bounds import CheckResult, any_failure, check_bounds, report_lines
from .config import (
    ScenarioConfig,
    config_hash,
    load_config,
    parse_config_text,
    save_config,
    serialize_config,
)
from .metrics import RunMetrics, compute_metrics, parse_trace_csv
from .runner import (
    RunResult,
    availability_run,
    build_topology,
    corruption_scan,
    recipe_availability,
    recipe_good_reference_skew,
    recipe_recovery,
    recipe_reliability,
    recipe_scan,
    recipe_worst_case_skew,
    run,
    write_scan_csv,
)

__all__ = [
    "CheckResult",
    "RunMetrics",
    "RunResult",
    "ScenarioConfig",
    "any_failure",
    "availability_run",
    "build_topology",
    "check_bounds",
    "compute_metrics",
    "config_hash",
    "corruption_scan",
    "load_config",
    "parse_config_text",
    "parse_trace_csv",
    "recipe_availability",
    "recipe_good_reference_skew",
    "recipe_recovery",
    "recipe_reliability",
    "recipe_scan",
    "recipe_worst_case_skew",
    "report_lines",
    "run",
    "save_config",
    "serialize_config",
    "write_scan_csv",
]
