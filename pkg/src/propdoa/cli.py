"""Command-line front end: operator counting and experiment runners.

Subcommands
-----------
count      Enumerate the valid extended propagators for a geometry.
spectrum   Averaged angular spectrum of one method -> CSV + JSON sidecar.
rmse       RMSE-vs-SNR curves for several methods -> CSV.
correlate  Correlation matrix of averaged spectra -> CSV.

Every command is deterministic given the config's seed. Exit codes: 0 on
success, 2 for usage/validation errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .array_model import ArrayConfig
from .estimators import parse_method_id
from .exceptions import EstimationError
from .experiments import ExperimentPlan, averaged_spectrum, correlate_methods, rmse_vs_snr
from .propagators import enumerate_operators
from .synthesis import Scenario

__all__ = ["RunConfig", "load_run_config", "parse_run_config", "build_parser", "main"]

_GRID_DEFAULTS = {"start": -90.0, "stop": 90.0, "step": 0.1}


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run-configuration document."""

    config: ArrayConfig
    scenario: Scenario
    trials: int
    grid_start: float = -90.0
    grid_stop: float = 90.0
    grid_step: float = 0.1

    def to_plan(self, methods, snr_grid_db=None) -> ExperimentPlan:
        return ExperimentPlan(
            config=self.config,
            scenario=self.scenario,
            methods=tuple(methods),
            trials=self.trials,
            snr_grid_db=snr_grid_db,
            grid_start=self.grid_start,
            grid_stop=self.grid_stop,
            grid_step=self.grid_step,
        )

    def to_document(self) -> dict:
        return {
            "sensors": self.config.sensors,
            "spacing_ratio": self.config.spacing_ratio,
            "sources": {
                "angles_deg": list(self.scenario.angles_deg),
                "powers": list(self.scenario.source_powers),
            },
            "snr_db": self.scenario.snr_db,
            "snapshots": self.scenario.snapshots,
            "trials": self.trials,
            "seed": self.scenario.seed,
            "grid": {
                "start": self.grid_start,
                "stop": self.grid_stop,
                "step": self.grid_step,
            },
        }


def _reject_unknown(document: dict, allowed, context: str):
    unknown = sorted(set(document) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {context} key(s): {', '.join(unknown)}")


def parse_run_config(document: dict) -> RunConfig:
    """Validate a config document; unknown keys are rejected."""
    if not isinstance(document, dict):
        raise ValueError("config document must be a JSON object")
    _reject_unknown(
        document,
        ("sensors", "spacing_ratio", "sources", "snr_db", "snapshots", "trials", "seed", "grid"),
        "config",
    )
    for key in ("sensors", "sources", "snr_db", "snapshots", "seed"):
        if key not in document:
            raise ValueError(f"config is missing required key {key!r}")
    sources = document["sources"]
    if not isinstance(sources, dict):
        raise ValueError("'sources' must be an object")
    _reject_unknown(sources, ("angles_deg", "powers"), "sources")
    if "angles_deg" not in sources:
        raise ValueError("config is missing required key 'sources.angles_deg'")
    grid = dict(_GRID_DEFAULTS)
    if "grid" in document:
        if not isinstance(document["grid"], dict):
            raise ValueError("'grid' must be an object")
        _reject_unknown(document["grid"], ("start", "stop", "step"), "grid")
        grid.update(document["grid"])
    config = ArrayConfig(
        sensors=document["sensors"],
        spacing_ratio=float(document.get("spacing_ratio", 0.5)),
    )
    scenario = Scenario(
        angles_deg=tuple(sources["angles_deg"]),
        snr_db=document["snr_db"],
        snapshots=document["snapshots"],
        seed=document["seed"],
        source_powers=tuple(sources.get("powers", ())),
    )
    trials = document.get("trials", 1)
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    if scenario.sources >= config.sensors:
        raise ValueError(
            f"config needs fewer sources than sensors, got P={scenario.sources}, N={config.sensors}"
        )
    return RunConfig(
        config=config,
        scenario=scenario,
        trials=int(trials),
        grid_start=float(grid["start"]),
        grid_stop=float(grid["stop"]),
        grid_step=float(grid["step"]),
    )


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_run_config(json.load(handle))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _sidecar_metadata(run: RunConfig, method: str) -> dict:
    meta = run.to_document()
    meta["method"] = method
    return meta


def _cmd_count(args) -> int:
    if args.sensors < 1 or args.sources < 1:
        raise ValueError("sensor and source counts must be positive")
    catalog = enumerate_operators(args.sensors, args.sources)
    n_max = args.sensors // args.sources
    if args.json:
        payload = {
            "sensors": catalog.sensors,
            "sources": catalog.sources,
            "n_max": n_max,
            "operators": catalog.method_ids(),
            "total": catalog.cardinality,
            "reason": catalog.reason,
        }
        print(json.dumps(payload, sort_keys=True))
        return 0
    print(f"sensors N={catalog.sensors}, sources P={catalog.sources}")
    if catalog.reason is not None:
        print(catalog.reason)
        return 0
    print(f"valid partition orders: 2 <= n <= {n_max}")
    for n in range(2, n_max + 1):
        ids = " ".join(f"psi:{n}:{i}" for i in range(1, n + 1))
        print(f"  n={n}: {ids}")
    print(f"total operators: {catalog.cardinality}")
    return 0


def _cmd_spectrum(args) -> int:
    run = load_run_config(args.config)
    method = parse_method_id(args.method).method_id
    plan = run.to_plan([method])
    spectrum = averaged_spectrum(plan, method, tolerate_failures=args.tolerate_failures)
    lines = ["angle_deg,value"]
    lines += [f"{_fmt(a)},{_fmt(v)}" for a, v in zip(spectrum.grid_deg, spectrum.values)]
    _write_text(args.output, "\n".join(lines) + "\n")
    sidecar = Path(str(args.output) + ".json")
    _write_text(sidecar, json.dumps(_sidecar_metadata(run, method), sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.output} and {sidecar}")
    return 0


def _parse_methods(raw: str) -> list:
    methods = [m.strip() for m in raw.split(",") if m.strip()]
    if not methods:
        raise ValueError("need at least one method id")
    return [parse_method_id(m).method_id for m in methods]


def _cmd_rmse(args) -> int:
    if args.snr_step <= 0:
        raise ValueError(f"snr-step must be positive, got {args.snr_step}")
    if args.snr_stop < args.snr_start:
        raise ValueError("snr-stop must be >= snr-start")
    run = load_run_config(args.config)
    methods = _parse_methods(args.methods)
    snr_grid = []
    snr = args.snr_start
    while snr <= args.snr_stop + 1e-9:
        snr_grid.append(round(snr, 12))
        snr += args.snr_step
    plan = run.to_plan(methods, snr_grid_db=tuple(snr_grid))
    curve = rmse_vs_snr(plan, tolerate_failures=args.tolerate_failures)
    lines = ["snr_db," + ",".join(methods)]
    for idx, snr in enumerate(curve.snr_db):
        row = [_fmt(snr)] + [_fmt(curve.rmse_deg[m][idx]) for m in methods]
        lines.append(",".join(row))
    _write_text(args.output, "\n".join(lines) + "\n")
    print(f"wrote {args.output}")
    return 0


def _cmd_correlate(args) -> int:
    run = load_run_config(args.config)
    methods = _parse_methods(args.methods)
    plan = run.to_plan(methods)
    matrix = correlate_methods(plan, tolerate_failures=args.tolerate_failures)
    lines = ["method," + ",".join(matrix.method_ids)]
    for i, method in enumerate(matrix.method_ids):
        lines.append(method + "," + ",".join(_fmt(v) for v in matrix.entries[i]))
    _write_text(args.output, "\n".join(lines) + "\n")
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="propdoa",
        description="Propagator-family direction-of-arrival experiments on uniform linear arrays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_count = sub.add_parser("count", help="enumerate valid extended propagators")
    p_count.add_argument("--sensors", type=int, required=True)
    p_count.add_argument("--sources", type=int, required=True)
    p_count.add_argument("--json", action="store_true", help="machine-readable output")
    p_count.set_defaults(func=_cmd_count)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--output", required=True, help="CSV output path")
    common.add_argument(
        "--tolerate-failures",
        action="store_true",
        help="skip failed trials instead of aborting",
    )

    p_spec = sub.add_parser("spectrum", parents=[common], help="averaged spectrum of one method")
    p_spec.add_argument("--method", required=True, help="method id, e.g. psi:3:1")
    p_spec.set_defaults(func=_cmd_spectrum)

    p_rmse = sub.add_parser("rmse", parents=[common], help="RMSE-vs-SNR curves")
    p_rmse.add_argument("--snr-start", type=float, required=True)
    p_rmse.add_argument("--snr-stop", type=float, required=True)
    p_rmse.add_argument("--snr-step", type=float, required=True)
    p_rmse.add_argument("--methods", required=True, help="comma-separated method ids")
    p_rmse.set_defaults(func=_cmd_rmse)

    p_corr = sub.add_parser("correlate", parents=[common], help="spectrum correlation matrix")
    p_corr.add_argument("--methods", required=True, help="comma-separated method ids")
    p_corr.set_defaults(func=_cmd_correlate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
