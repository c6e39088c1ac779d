"""
Batch front-end for the SLIPT simulator.

    python -m app.main run --scenario tank_1m5 --seed 42 --out results/
    python -m app.main sweep --scenario tank_1m5 --param policy.alpha --values 0,0.5,1
    python -m app.main validate --scenario my_scenario.json

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Tuple

from app.config.scenario import ScenarioSpec, Violation
from app.config.settings import configure_logging, get_settings
from app.data.loaders import load_raw, load_scenario, resolve_scenario_path
from app.data.repositories import StorageRepo, SummaryRepo, SweepRepo, TraceRepo
from app.domain.errors import ConfigError, SliptError
from app.engine.simulator import Simulator
from app.engine.sweep import parse_values, plan_sweep, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; usage problems here are exit 1
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slipt-sim", description="Underwater optical SLIPT discrete-event simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON file or bundled name (tank_1m5, vertical_supercap)")
        p.add_argument("--seed", type=int, default=None, help="master seed; overrides the scenario's seed")

    def add_outputs(p):
        group = p.add_argument_group("Output Controls")
        group.add_argument("--out", default=None, help="output directory (default: $SLIPT_OUT_DIR or results/)")
        group.add_argument("--format", choices=["csv", "jsonl"], default=None, help="trace format")
        group.add_argument("--validate-only", action="store_true", help="check the scenario and stop")

    run_p = sub.add_parser("run", help="simulate one scenario")
    add_common(run_p)
    add_outputs(run_p)

    sweep_p = sub.add_parser("sweep", help="one run per value of a scenario parameter")
    add_common(sweep_p)
    add_outputs(sweep_p)
    sweep_group = sweep_p.add_argument_group("Sweep")
    sweep_group.add_argument("--param", required=True, help="dotted scenario path, e.g. policy.alpha or nodes.0.v_threshold")
    sweep_group.add_argument("--values", required=True, help="comma-separated values, e.g. 0,0.25,0.5")

    validate_p = sub.add_parser("validate", help="list every problem in a scenario")
    add_common(validate_p)
    return parser


# ==========================================
# VALIDATION
# ==========================================
def _load(scenario: str, seed: Optional[int]) -> Tuple[Optional[ScenarioSpec], List[Violation], Optional[str]]:
    try:
        spec, found, base_dir = load_scenario(scenario, seed)
    except FileNotFoundError as e:
        return None, [Violation(path="scenario", message=f"cannot read '{scenario}': {e}")], None
    except (OSError, json.JSONDecodeError) as e:
        return None, [Violation(path="scenario", message=f"cannot parse '{scenario}': {e}")], None
    return spec, found, base_dir


def _build_check(spec: ScenarioSpec, seed: Optional[int], base_dir: Optional[str]) -> List[Violation]:
    """Problems that only show when the scenario is turned into domain objects."""
    try:
        Simulator(spec, seed=seed, base_dir=base_dir)
    except ConfigError as e:
        return [Violation(path=e.path, message=e.message)]
    except (SliptError, ValueError, OSError) as e:
        return [Violation(path="", message=str(e))]
    return []


def validate(scenario: str, seed: Optional[int] = None) -> List[Violation]:
    """Every reason the scenario would not start; empty when a run would."""
    spec, found, base_dir = _load(scenario, seed)
    if spec is None:
        return found
    return _build_check(spec, seed, base_dir)


def _report(violations: List[Violation]) -> None:
    for v in violations:
        print(f"❌ {v}", file=sys.stderr)


# ==========================================
# COMMANDS
# ==========================================
def _cmd_validate(args) -> int:
    report = validate(args.scenario, args.seed)
    if report:
        _report(report)
        return EXIT_INVALID
    print(f"✅ {args.scenario}: no violations")
    return EXIT_OK


def _cmd_run(args, out_dir: str) -> int:
    spec, found, base_dir = _load(args.scenario, args.seed)
    if spec is not None:
        found = _build_check(spec, args.seed, base_dir)
    if found:
        _report(found)
        return EXIT_INVALID
    if args.validate_only:
        print(f"✅ {args.scenario}: no violations")
        return EXIT_OK

    fmt = args.format or spec.trace.format
    try:
        result = Simulator(spec, seed=args.seed, base_dir=base_dir).run()
        if spec.trace.enabled:
            TraceRepo.save(result.trace, out_dir, fmt)
        SummaryRepo.save(result.metrics, out_dir)
        for node_id, records in result.storage.items():
            StorageRepo.save(node_id, records, out_dir)
    except Exception as e:
        logger.exception("run failed")
        print(f"❌ Run failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    totals = result.metrics.totals()
    print(
        f"✨ {spec.name}: harvested {totals['harvested_J']:.4g} J, "
        f"decoded {totals['decoded_bits']:.4g} bits -> {out_dir}"
    )
    return EXIT_OK


def _cmd_sweep(args, out_dir: str) -> int:
    try:
        path = resolve_scenario_path(args.scenario)
        raw = load_raw(path)
    except (OSError, json.JSONDecodeError) as e:
        _report([Violation(path="scenario", message=f"cannot read '{args.scenario}': {e}")])
        return EXIT_INVALID

    values = parse_values(args.values)
    try:
        cells, found = plan_sweep(raw, args.param, values, args.seed)
    except ConfigError as e:
        _report([Violation(path=e.path, message=e.message)])
        return EXIT_INVALID
    base_dir = os.path.dirname(path)
    for cell in cells:
        found.extend(_build_check(cell.spec, cell.seed, base_dir))
    if found:
        _report(found)
        return EXIT_INVALID
    if args.validate_only:
        print(f"✅ {len(cells)} sweep cells: no violations")
        return EXIT_OK

    print(f"🚀 Sweeping {args.param} over {len(cells)} values...")
    fmt = args.format or cells[0].spec.trace.format
    try:
        rows = run_sweep(cells, args.param, out_dir, fmt, base_dir, get_settings().sweep_workers)
        table = SweepRepo.save(rows, out_dir)
    except Exception as e:
        logger.exception("sweep failed")
        print(f"❌ Sweep failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"✨ Sweep table written to {table}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID

    configure_logging()
    if args.command == "validate":
        return _cmd_validate(args)

    out_dir = args.out or str(get_settings().out_dir)
    if args.command == "run":
        return _cmd_run(args, out_dir)
    return _cmd_sweep(args, out_dir)


if __name__ == "__main__":
    sys.exit(main())
