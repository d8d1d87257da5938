"""Command-line front end: run experiments, calibrate, print the gate table.

Exit codes: 0 success, 2 configuration problems, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .experiment import (
    ConfigError,
    calibrate,
    load_config,
    run_experiment,
)
from .gate import ZeroSuccessError, gate_channel
from .tomography import FitError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULT_CAL_GRID = {
    "overlap": (0.85, 1.00, 16),
    "pair_mixedness": (0.00, 0.20, 11),
    "input_mixedness": (0.00, 0.20, 11),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="telegate",
                                     description="phase-gate Bell-analyzer experiment simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one experiment from a config file")
    run.add_argument("config", help="YAML experiment configuration")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="output path base (.json / .counts.csv)")
    run.add_argument("--format", choices=("json", "csv"), default="json",
                     help="what to print on stdout")

    cal = sub.add_parser("calibrate", help="grid-fit noise parameters to target fidelities")
    cal.add_argument("config", help="YAML file with 'targets' and optional 'grid'")
    cal.add_argument("--out", default=None, help="write the calibration result as JSON")
    cal.add_argument("--format", choices=("json", "csv"), default="json")

    gt = sub.add_parser("gate-table", help="print the ideal gate truth table")
    gt.add_argument("--format", choices=("json", "csv", "text"), default="text")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.out is not None:
        config = dataclasses.replace(config, out=args.out)
    report = run_experiment(config)
    if args.format == "json":
        print(report.to_json())
    else:
        print(report.counts_csv(), end="")
    return EXIT_OK


def _load_calibration_config(path: str):
    import yaml

    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root: expected a mapping")
    targets = data.get("targets")
    if not isinstance(targets, dict) or not targets:
        raise ConfigError("targets: a non-empty mapping of quantity -> value is required")
    grid_spec = data.get("grid", {})
    if not isinstance(grid_spec, dict):
        raise ConfigError("grid: expected a mapping of parameter -> [start, stop, points]")
    grids = {}
    for name, default in DEFAULT_CAL_GRID.items():
        raw = grid_spec.get(name, default)
        try:
            start, stop, num = raw
            grids[name] = np.linspace(float(start), float(stop), int(num))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid.{name}: expected [start, stop, points], got {raw!r}") from exc
    unknown = set(grid_spec) - set(DEFAULT_CAL_GRID)
    if unknown:
        raise ConfigError(f"grid: unknown parameters {sorted(unknown)}")
    try:
        targets = {str(k): float(v) for k, v in targets.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"targets: values must be numbers ({exc})") from exc
    return targets, grids


def _cmd_calibrate(args) -> int:
    targets, grids = _load_calibration_config(args.config)
    try:
        result = calibrate(targets, grids["overlap"], grids["pair_mixedness"],
                           grids["input_mixedness"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = {
        "overlap": result.overlap,
        "pair_mixedness": result.pair_mixedness,
        "input_mixedness": result.input_mixedness,
        "residual": result.residual,
        "predictions": result.predictions,
        "targets": targets,
    }
    if args.format == "json":
        text = json.dumps(payload, sort_keys=True, indent=2)
    else:
        lines = ["quantity,value"]
        for key in ("overlap", "pair_mixedness", "input_mixedness", "residual"):
            lines.append(f"{key},{payload[key]!r}")
        for key in sorted(result.predictions):
            lines.append(f"prediction.{key},{result.predictions[key]!r}")
        text = "\n".join(lines)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
            fh.write("\n")
    return EXIT_OK


def _cmd_gate_table(args) -> int:
    channel = gate_channel(1.0)
    (kraus,) = channel.kraus
    basis = ("HH", "HV", "VH", "VV")
    rows = []
    for i, name in enumerate(basis):
        col = kraus[:, i]
        j = int(np.argmax(np.abs(col)))
        amp = col[j]
        sign = "-" if amp.real < 0 else ""
        rows.append({
            "input": name,
            "output": f"{sign}{basis[j]}",
            "amplitude": float(amp.real),
            "success_probability": float(np.abs(col) @ np.abs(col)),
        })
    if args.format == "json":
        print(json.dumps({"truth_table": rows}, indent=2))
    elif args.format == "csv":
        print("input,output,amplitude,success_probability")
        for r in rows:
            print(f"{r['input']},{r['output']},{r['amplitude']!r},{r['success_probability']!r}")
    else:
        print("input  ->  output   amplitude   success")
        for r in rows:
            print(f" {r['input']}   ->  {r['output']:>3}      {r['amplitude']:+.6f}    {r['success_probability']:.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        return _cmd_gate_table(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, ZeroSuccessError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
