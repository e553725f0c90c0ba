"""Command-line entry point: ``ubsi <command> [--config cfg.json] [overrides]``.

Every run writes ``report.json`` (config, summary, rows) and ``report.csv``
(one row per verdict) to ``--out``; the exit code is 0 iff every verdict holds.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import constants as K
from . import harness as H
from .fields import make_field

COMMANDS = (
    "check-inequality",
    "sweep-gressman",
    "verify-derivatives",
    "constants",
    "heatball-volume",
    "lifting-check",
    "cov-check",
    "rectangle-demo",
)

UNIT_SQUARE = {"shape": "box", "lows": [0.0, 0.0], "highs": [1.0, 1.0]}


def load_schema() -> dict:
    return json.loads(resources.files("ubsi").joinpath("config_schema.json").read_text())


def validate_config(cfg: dict) -> dict:
    jsonschema.validate(cfg, load_schema())
    return cfg


def _field(cfg):
    return make_field(**{"family": "quadratic", "params": {"n": 2}, **cfg.get("field", {})})


def _default_c(cfg, dom):
    if "c" in cfg:
        return float(cfg["c"])
    return K.laplace_constant(dom, cfg.get("delta"), cfg.get("safety", K.DEFAULT_SAFETY)).c


def run(command: str, cfg: dict) -> H.RunResult:
    """Dispatch a validated config to the matching harness routine."""
    if command == "check-inequality":
        cfg = {"field": {"family": "quadratic", "params": {"n": 2}}, "domain": UNIT_SQUARE, **cfg}
        return H.check_inequality(cfg)
    if command == "sweep-gressman":
        c = cfg.get("c", 0.1)
        hi = cfg.get("N_max", math.floor(math.e / c) + 3)
        return H.counterexample_sweep(c, range(cfg.get("N_min", 1), hi + 1), resolution=cfg.get("resolution", 512))
    if command == "verify-derivatives":
        quad = H.build_quad(cfg["quadrature"]) if "quadrature" in cfg else None
        return H.verify_derivative_formulas(
            dims=tuple(cfg.get("dims", (1, 2, 3))),
            heat_dims=tuple(cfg.get("heat_dims", (1, 2))),
            radii=tuple(cfg.get("radii", (0.3, 0.6, 0.9))),
            R=cfg.get("R", 1.0),
            quad=quad,
        )
    if command == "constants":
        return H.constants_run({"domain": UNIT_SQUARE, **cfg})
    if command == "heatball-volume":
        return H.heatball_volume_run(cfg)
    if command == "lifting-check":
        dom = H.build_domain(cfg.get("domain", UNIT_SQUARE))
        omega2 = H.build_domain(cfg.get("omega2", {"shape": "box", "lows": [0.0], "highs": [1.0]}))
        ps = H.parse_p(cfg.get("p", [1, 2, 4, "inf"]))
        return H.lifting_check(_field(cfg), dom, omega2, _default_c(cfg, dom), ps, cfg.get("resolution"))
    if command == "cov-check":
        dom = H.build_domain(cfg.get("domain", UNIT_SQUARE))
        ps = H.parse_p(cfg.get("p", [1, 2, 4, "inf"]))
        matrix = cfg.get("matrix", np.eye(dom.dim).tolist())
        return H.change_of_variables_check(_field(cfg), dom, matrix, _default_c(cfg, dom), ps, cfg.get("resolution"))
    if command == "rectangle-demo":
        deltas = cfg.get("deltas", [cfg["delta"]] if "delta" in cfg else [0.1, 0.05, 0.01])
        parts = [H.rectangle_demo(d) for d in deltas]
        rows = [{"delta": p.summary["delta"], **r} for p in parts for r in p.rows]
        return H.RunResult("rectangle-demo", rows, {"runs": [p.summary for p in parts]}, all(p.passed for p in parts))
    raise ValueError(f"unknown command {command!r}")


# ---------------------------------------------------------------- reports


def _plain(x):
    """Recursively turn numpy scalars/arrays and infinities into JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return x


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_reports(result: H.RunResult, cfg: dict, out: Path) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "command": result.command,
        "config": cfg,
        "passed": result.passed,
        "summary": result.summary,
        "rows": result.rows,
    }
    json_path = out / "report.json"
    json_path.write_text(json.dumps(_plain(report), indent=2, sort_keys=True) + "\n")
    columns = []
    for row in result.rows:
        columns.extend(k for k in row if k not in columns)
    csv_path = out / "report.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in result.rows:
            w.writerow([_cell(row.get(k)) for k in columns])
    return json_path, csv_path


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ubsi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run config")
        sp.add_argument("--p", help="comma-separated exponents, e.g. 1,2,inf")
        sp.add_argument("--resolution", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path, help="output directory (default: config 'out' or ./ubsi-report)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = json.loads(args.config.read_text()) if args.config else {}
    if args.p is not None:
        cfg["p"] = ["inf" if v.strip().lower() == "inf" else float(v) for v in args.p.split(",")]
    if args.resolution is not None:
        cfg["resolution"] = args.resolution
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg.get("command", args.command) != args.command:
        print(f"config is for {cfg['command']!r}, not {args.command!r}", file=sys.stderr)
        return 2
    try:
        validate_config(cfg)
    except jsonschema.ValidationError as exc:
        print(f"invalid config: {exc.message}", file=sys.stderr)
        return 2
    out = args.out or Path(cfg.get("out", "ubsi-report"))
    try:
        result = run(args.command, cfg)
    except H.HypothesisViolation as exc:
        print(f"run refused, operator hypothesis fails: {exc}", file=sys.stderr)
        write_reports(H.RunResult(args.command, [], {"refused": str(exc), "point": exc.point}, False), cfg, out)
        return 1
    json_path, csv_path = write_reports(result, cfg, out)
    print(f"{args.command}: {'PASS' if result.passed else 'FAIL'} ({len(result.rows)} rows) -> {csv_path}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
