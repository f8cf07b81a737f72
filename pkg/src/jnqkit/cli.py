"""Command-line entry point: ``jnq compute | verify | calibrate | sweep``.

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 analytic divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .catalog import CATALOG, make_function
from .core import ConfigError, DivergenceError, GridFunction, InvariantError, Params
from .io import csv_text, json_text, load_grid
from .norms import (
    VARIANTS,
    PackingStrategy,
    jn_con_norm,
    jnq_dyadic_norm,
    jnq_dyadic_psi_norm,
    jnq_norm_integral,
    jnq_norm_packing,
    jnq_norm_variants,
)
from .verify import (
    SUITES,
    all_passed,
    calibrate,
    classification_matrix,
    get_suite,
    golden_path,
    reports_jsonl,
    run_suite,
    summarize,
    with_tolerances,
    write_goldens,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENT = 0, 1, 2, 3
DEFAULT_LEVEL = {1: 10, 2: 6}
SWEEP_LEVEL = {1: 6, 2: 3}
NORMS = ("jn_con", "jnq", "jnq_integral", "dyadic", "dyadic_psi", "variant_I", "variant_II",
         "variant_III", "q_alpha")
COMPUTE_COLUMNS = ("function", "n", "level", "p", "q", "alpha", "norm", "status", "value",
                   "strategy", "edge", "note")
SWEEP_COLUMNS = ("function", "n", "level", "p", "q", "alpha", "alpha0", "regime", "signature",
                 "observed", "jnq", "jnq_status", "jn_con", "dyadic")


class RunConfig(BaseModel):
    """Validated configuration of one CLI run; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["compute", "verify", "calibrate", "sweep"]
    fn: Optional[str] = None
    input: Optional[str] = None
    domain: int = Field(1, ge=1, le=2)
    grid_level: Optional[int] = Field(None, ge=0, le=14)
    p: list[float] = Field(default_factory=lambda: [2.0])
    q: list[float] = Field(default_factory=lambda: [2.0])
    alpha: list[float] = Field(default_factory=lambda: [-0.25])
    strategy: str = "auto"
    norms: list[str] = Field(default_factory=lambda: list(NORMS))
    suite: str = "default"
    seed: int = 0
    out: Optional[str] = None
    workers: int = Field(1, ge=1, le=64)
    overwrite_goldens: bool = False
    golden_dir: Optional[str] = None
    tolerances: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.fn is not None and self.fn not in CATALOG:
            raise ValueError(f"unknown function {self.fn!r}; choose from {sorted(CATALOG)}")
        if self.fn is not None and self.input is not None:
            raise ValueError("give either fn or input, not both")
        if self.strategy not in VARIANTS:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        bad = [n for n in self.norms if n not in NORMS]
        if bad:
            raise ValueError(f"unknown norms {bad}; choose from {list(NORMS)}")
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}")
        if any(not (v >= 1.0) for v in self.p):
            raise ValueError("p values must lie in [1, inf]")
        if any(not (1.0 <= v < math.inf) for v in self.q):
            raise ValueError("q values must lie in [1, inf)")
        return self


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jnq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="JSON file with RunConfig keys (flags override it)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                        help="override a named tolerance (repeatable)")

    def function_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--fn", help=f"catalog function: {', '.join(CATALOG)}")
        sp.add_argument("--input", help="serialized grid function file")
        sp.add_argument("--domain", type=int, choices=(1, 2), help="spatial dimension n")
        sp.add_argument("--grid-level", type=int, help="grid level on the unit root cube")
        sp.add_argument("--p", type=float, nargs="*", help="p values (inf allowed)")
        sp.add_argument("--q", type=float, nargs="*")
        sp.add_argument("--alpha", type=float, nargs="*")
        sp.add_argument("--strategy", choices=VARIANTS)

    def suite_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--suite", choices=sorted(SUITES))
        sp.add_argument("--workers", type=int)
        sp.add_argument("--golden-dir", help="golden directory (default: $JNQ_GOLDEN_DIR or packaged)")

    sp = sub.add_parser("compute", help="compute norms for one function")
    common(sp)
    function_args(sp)
    sp.add_argument("--norms", nargs="*", choices=NORMS)

    sp = sub.add_parser("verify", help="run a verification suite against frozen goldens")
    common(sp)
    suite_args(sp)

    sp = sub.add_parser("calibrate", help="measure envelopes and write a golden file")
    common(sp)
    suite_args(sp)
    sp.add_argument("--overwrite-goldens", action="store_true", default=None)

    sp = sub.add_parser("sweep", help="classification matrix over a (p, q, alpha) grid")
    common(sp)
    function_args(sp)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data["command"] = args.command
    for key, value in vars(args).items():
        if key in ("config", "command", "tolerance") or value is None:
            continue
        data[key] = value
    for item in args.tolerance or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override {item!r} is not NAME=VALUE")
        try:
            data.setdefault("tolerances", {})[name] = float(value)
        except ValueError as exc:
            raise ConfigError(f"tolerance {name!r} must be numeric") from exc
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _load_function(cfg: RunConfig, default_level: dict[int, int]) -> tuple[str, GridFunction]:
    if cfg.input is not None:
        return Path(cfg.input).stem, load_grid(cfg.input)
    name = cfg.fn or "step"
    level = cfg.grid_level if cfg.grid_level is not None else default_level[cfg.domain]
    return name, make_function(name, cfg.domain, level, seed=cfg.seed)


def _norm_value(f: GridFunction, norm: str, prm: Params, strategy: PackingStrategy):
    if norm == "jn_con":
        return jn_con_norm(f, prm.p, prm.q, strategy)
    if norm == "jnq":
        return jnq_norm_packing(f, prm, strategy)
    if norm == "jnq_integral":
        return jnq_norm_integral(f, prm)
    if norm == "dyadic":
        return jnq_dyadic_norm(f, prm)
    if norm == "dyadic_psi":
        return jnq_dyadic_psi_norm(f, prm)
    if norm == "q_alpha":
        return jnq_norm_packing(f, prm.with_p(math.inf), strategy)
    return jnq_norm_variants(f, prm, norm.split("_")[1], strategy=strategy)


def _write(out: str | None, files: dict[str, str]) -> None:
    if out is None:
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (d / name).write_text(text)


def _params_grid(cfg: RunConfig) -> list[Params]:
    grid = []
    for p in cfg.p:
        for q in cfg.q:
            for a in cfg.alpha:
                grid.append(Params(p, q, a))
    return grid


def cmd_compute(cfg: RunConfig) -> int:
    name, f = _load_function(cfg, DEFAULT_LEVEL)
    strategy = PackingStrategy(cfg.strategy)
    rows, results = [], []
    divergent = False
    for prm in _params_grid(cfg):
        for norm in cfg.norms:
            row = {"function": name, "n": f.n, "level": f.level, "p": prm.p, "q": prm.q,
                   "alpha": prm.alpha, "norm": norm}
            try:
                res = _norm_value(f, norm, prm, strategy)
                row.update(status="ok", value=res.value, strategy=res.strategy, edge=res.edge)
                results.append({**row, "result": res.to_json()})
            except DivergenceError as exc:
                divergent = True
                row.update(status="divergent", note=str(exc))
                results.append({**row, "result": None})
            rows.append(row)
    _write(cfg.out, {"results.csv": csv_text(COMPUTE_COLUMNS, rows),
                     "results.json": json_text({"function": name, "digest": f.digest(), "rows": results})})
    print(f"{'norm':12s} {'p':>6s} {'q':>5s} {'alpha':>7s}  value")
    for r in rows:
        val = f"{r['value']:.12g}" if r["status"] == "ok" else "divergent"
        print(f"{r['norm']:12s} {r['p']:6g} {r['q']:5g} {r['alpha']:7g}  {val}")
    return EXIT_DIVERGENT if divergent else EXIT_OK


def _suite(cfg: RunConfig):
    suite = get_suite(cfg.suite, seed=cfg.seed)
    return with_tolerances(suite, cfg.tolerances) if cfg.tolerances else suite


def cmd_verify(cfg: RunConfig) -> int:
    suite = _suite(cfg)
    reports = run_suite(suite, workers=cfg.workers, golden_directory=cfg.golden_dir)
    summary = summarize(reports)
    _write(cfg.out, {"reports.jsonl": reports_jsonl(reports), "summary.txt": summary + "\n"})
    print(summary)
    return EXIT_OK if all_passed(reports) else EXIT_FAIL


def cmd_calibrate(cfg: RunConfig) -> int:
    suite = _suite(cfg)
    path = golden_path(suite, cfg.golden_dir)
    if path.exists() and not cfg.overwrite_goldens:
        raise ConfigError(f"{path} exists; pass --overwrite-goldens to replace it")
    doc = calibrate(suite, workers=cfg.workers)
    write_goldens(doc, path, overwrite=cfg.overwrite_goldens)
    print(f"wrote {path}")
    for fam, band in sorted(doc["families"].items()):
        flag = "" if band["informative"] else "  (uninformative)"
        print(f"  {fam:24s} [{band['lo']:.6g}, {band['hi']:.6g}] n={band['count']}{flag}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    name, f = _load_function(cfg, SWEEP_LEVEL)
    grid = _params_grid(cfg)
    # close every (q, alpha) column with its p = inf limit
    for q in cfg.q:
        for a in cfg.alpha:
            if cfg.p and math.inf not in cfg.p:
                grid.append(Params(math.inf, q, a))
    rows = []
    for prm, cell in zip(grid, classification_matrix(f, grid)):
        row = {"function": name, "n": f.n, "level": f.level, **cell}
        try:
            row.update(jnq=jnq_norm_packing(f, prm).value, jnq_status="ok")
        except DivergenceError:
            row.update(jnq=None, jnq_status="divergent")
        row["jn_con"] = jn_con_norm(f, prm.p, prm.q).value
        row["dyadic"] = jnq_dyadic_norm(f, prm).value
        rows.append(row)
    manifest = {
        "table": "sweep.csv",
        "columns": list(SWEEP_COLUMNS),
        "plots": [
            {"kind": "line", "x": "p", "y": "jnq", "group_by": ["q", "alpha"], "log_x": True},
            {"kind": "heatmap", "x": "alpha", "y": "p", "value": "regime", "facet": "q"},
        ],
    }
    _write(cfg.out, {"sweep.csv": csv_text(SWEEP_COLUMNS, rows), "plot_manifest.json": json_text(manifest)})
    print(csv_text(SWEEP_COLUMNS, rows), end="")
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "calibrate": cmd_calibrate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(json.dumps({"error": "divergent", "message": str(exc)}), file=sys.stderr)
        return EXIT_DIVERGENT
    except InvariantError as exc:
        print(json.dumps({"error": "invariant", "message": str(exc)}), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
