"""Suites, the parallel runner, calibration of frozen envelopes, and the classification matrix."""

from __future__ import annotations

import json
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import oracles
from .catalog import CATALOG, make_function
from .checks import (
    CHECKS,
    FAMILIES,
    BoundCheck,
    CheckContext,
    CheckOutput,
    Measurement,
    classify_cell,
    default_classification_grid,
)
from .core import ConfigError, GridFunction, InvariantError, Params, Threshold, VerificationReport

GOLDEN_FORMAT = "jnqkit-goldens"
GOLDEN_VERSION = 1
GOLDEN_ENV = "JNQ_GOLDEN_DIR"
BAND_RTOL = 1e-9

DEFAULT_LEVELS = {"desk": (10, 6), "medium": (8, 4), "small": (6, 3)}


@dataclass(frozen=True)
class Suite:
    """Catalog subset, checks, dimensions, grid levels per scale and the seed."""

    name: str
    functions: tuple[str, ...]
    checks: tuple[str, ...]
    dims: tuple[int, ...] = (1, 2)
    seed: int = 0
    levels: tuple[tuple[str, int, int], ...] = tuple((k, a, b) for k, (a, b) in DEFAULT_LEVELS.items())
    tolerances: tuple[Threshold, ...] = field(default_factory=lambda: (
        Threshold("identity_rel", 1e-12, "PAPER", "proven identities"),
        Threshold("constant_one_slack", 1e-10, "PAPER", "constant-1 inequalities"),
        Threshold("band_rtol", BAND_RTOL, "DERIVED", "reproduction tolerance for frozen bands"),
    ))

    def __post_init__(self) -> None:
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
        bad = [f for f in self.functions if f not in CATALOG]
        if bad:
            raise ConfigError(f"unknown catalog functions {bad}")
        if any(n not in (1, 2) for n in self.dims):
            raise ConfigError("dimensions are limited to 1 and 2")

    def level_map(self, n: int) -> dict[str, int]:
        return {name: (a if n == 1 else b) for name, a, b in self.levels}

    def scale_json(self) -> dict:
        return {name: {"n=1": a, "n=2": b} for name, a, b in self.levels}

    def tolerance(self, name: str) -> float:
        for t in self.tolerances:
            if t.name == name:
                return float(t.value)
        raise KeyError(name)

    def families(self) -> list[str]:
        return sorted(fam for fam, chk in FAMILIES.items() if chk in self.checks)


ALL_CHECKS = tuple(CHECKS)
IDENTITY_CHECKS = ("osc_identity", "scaling_identity")

SUITES = {
    "default": Suite("default", tuple(CATALOG), ALL_CHECKS),
    "identities": Suite("identities", tuple(CATALOG), IDENTITY_CHECKS),
    "constant": Suite("constant", ("constant",), ALL_CHECKS),
    "empty": Suite("empty", (), ()),
}


def with_tolerances(suite: Suite, overrides: dict[str, float]) -> Suite:
    """Replace tolerance values by name; unknown names are a configuration error."""
    known = {t.name for t in suite.tolerances}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown tolerances {unknown}; known: {sorted(known)}")
    tols = tuple(replace(t, value=float(overrides[t.name])) if t.name in overrides else t
                 for t in suite.tolerances)
    return replace(suite, tolerances=tols)


def get_suite(name: str, seed: int | None = None, dims: Sequence[int] | None = None,
              functions: Sequence[str] | None = None) -> Suite:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    s = SUITES[name]
    if seed is not None:
        s = replace(s, seed=int(seed))
    if dims is not None:
        s = replace(s, dims=tuple(int(d) for d in dims))
    if functions is not None:
        s = replace(s, functions=tuple(functions))
    return s


# tasks ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class Task:
    check: str
    function: str
    n: int
    seed: int
    levels: tuple[tuple[str, int], ...]
    identity_rel: float
    slack: float


def suite_tasks(suite: Suite) -> list[Task]:
    tasks = []
    for check in suite.checks:
        _, per_function, group, dims = CHECKS[check]
        for n in suite.dims:
            if n not in dims:
                continue
            levels = tuple(sorted(suite.level_map(n).items()))
            fns: list[str] = []
            if per_function in (True, "both"):
                fns += [f for f in suite.functions if group is None or CATALOG[f].participates(group)]
            if per_function in (False, "both") and suite.functions:
                fns.append("")
            tasks.extend(Task(check, f, n, suite.seed, levels, suite.tolerance("identity_rel"),
                              suite.tolerance("constant_one_slack")) for f in fns)
    return tasks


def run_task(task: Task) -> CheckOutput:
    fn = CHECKS[task.check][0]
    return fn(CheckContext(task.function, task.n, task.seed, dict(task.levels),
                           task.identity_rel, task.slack))


def _execute(tasks: list[Task], workers: int) -> list[CheckOutput]:
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(t) for t in tasks]
    ctx = multiprocessing.get_context("fork" if os.name == "posix" else "spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(run_task, tasks, chunksize=1))


def _collect(suite: Suite, workers: int):
    outputs = _execute(suite_tasks(suite), workers)
    reports = [r for o in outputs for r in o.reports]
    measurements = [m for o in outputs for m in o.measurements]
    bounds = [b for o in outputs for b in o.bounds]
    return reports, measurements, bounds


# goldens ------------------------------------------------------------------------------

def golden_dir(directory: str | os.PathLike | None = None) -> Path:
    if directory is not None:
        return Path(directory)
    env = os.environ.get(GOLDEN_ENV)
    return Path(env) if env else Path(__file__).parent / "goldens"


def golden_path(suite: Suite, directory: str | os.PathLike | None = None) -> Path:
    return golden_dir(directory) / f"{suite.name}-seed{suite.seed}.json"


def load_goldens(suite: Suite, directory: str | os.PathLike | None = None) -> dict:
    path = golden_path(suite, directory)
    if not path.exists():
        raise ConfigError(f"calibration file {path} is missing; run calibrate first")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"calibration file {path} is unreadable: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != GOLDEN_FORMAT:
        raise ConfigError(f"{path} is not a golden threshold file")
    if data.get("version") != GOLDEN_VERSION:
        raise ConfigError(f"{path} has version {data.get('version')}, expected {GOLDEN_VERSION}")
    if data.get("suite") != suite.name or data.get("seed") != suite.seed:
        raise ConfigError(f"{path} was calibrated for suite {data.get('suite')!r} seed {data.get('seed')}")
    fams = data.get("families")
    if not isinstance(fams, dict):
        raise ConfigError(f"{path} has no families table")
    for name, band in fams.items():
        try:
            lo, hi = float(band["lo"]), float(band["hi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: family {name!r} is malformed") from exc
        if not (lo <= hi) or band.get("provenance") != "DERIVED":
            raise ConfigError(f"{path}: family {name!r} has an invalid band")
    return data


def _band_reports(suite: Suite, measurements: list[Measurement], bounds: list[BoundCheck],
                  goldens: dict, source: str) -> list[VerificationReport]:
    fams = goldens["families"]
    rtol = suite.tolerance("band_rtol")
    out = []
    for m in measurements:
        band = fams.get(m.family)
        if band is None or not band.get("informative", True):
            raise ConfigError(f"no frozen envelope for family {m.family!r} in {source}")
        lo, hi = float(band["lo"]), float(band["hi"])
        ok = m.lo >= lo - rtol * abs(lo) and m.hi <= hi + rtol * abs(hi)
        out.append(VerificationReport(
            f"envelope_{m.family}", ok, m.function, m.params,
            {"lo": m.lo, "hi": m.hi, "count": m.count, "band_lo": lo, "band_hi": hi},
            (Threshold("band", (lo, hi), "DERIVED", f"{source}#{m.family}"),), m.digest))
    for b in bounds:
        band = fams.get(b.family)
        if band is None or not band.get("informative", True):
            raise ConfigError(f"no frozen bound for family {b.family!r} in {source}")
        hi = float(band["hi"])
        ok = all(v > hi for _, v in b.values)
        out.append(VerificationReport(
            b.check, ok, b.function, b.params, {**dict(b.values), "bound": hi},
            (Threshold("bound", hi, "DERIVED", f"{source}#{b.family}"),), b.digest))
    return out


def run_suite(suite: Suite, workers: int = 1, golden_directory: str | os.PathLike | None = None,
              goldens: dict | None = None) -> list[VerificationReport]:
    """Run every check of the suite; reports come back sorted by (check, function, params)."""
    tasks = suite_tasks(suite)
    if not tasks:
        return []
    needs = suite.families()
    source = "inline"
    if needs and goldens is None:
        goldens = load_goldens(suite, golden_directory)
        source = golden_path(suite, golden_directory).name
    reports, measurements, bounds = _collect(suite, workers)
    if measurements or bounds:
        reports += _band_reports(suite, measurements, bounds, goldens, source)
    return sorted(reports, key=lambda r: (r.sort_key(), r.digest))


# calibration ---------------------------------------------------------------------------

def oracle_crosscheck(seed: int = 0) -> float:
    """Max relative disagreement between fast paths and brute-force oracles on tiny grids."""
    from .functionals import phi_dyadic_pyramid, phi_power_block, psi_pyramid

    worst = 0.0
    for n, level in ((1, 3), (2, 2)):
        for name in sorted(CATALOG):
            x = make_function(name, n, level, seed=seed).values
            for prm in (Params(2.0, 2.0, -0.25), Params(2.0, 1.0, 0.25)):
                pairs = (
                    (phi_power_block(x, prm) ** (1 / prm.q), oracles.phi_loop(x, prm)),
                    (psi_pyramid(x, prm)[0].ravel()[0] ** (1 / prm.q), oracles.psi_loop(x, prm)),
                    (phi_dyadic_pyramid(x, prm)[0].ravel()[0] ** (1 / prm.q), oracles.phi_dyadic_loop(x, prm)),
                )
                for fast, slow in pairs:
                    scale = max(abs(fast), abs(slow))
                    if scale > 0:
                        worst = max(worst, abs(fast - slow) / scale)
    return worst


def calibrate(suite: Suite, workers: int = 1, oracle_tol: float = 1e-6) -> dict:
    """Measure every envelope family on the suite and return the golden document."""
    err = oracle_crosscheck(suite.seed)
    if err > oracle_tol:
        raise InvariantError(f"fast paths disagree with the oracles (max rel error {err:.3g})")
    _, measurements, _ = _collect(suite, workers)
    families = {}
    for fam in suite.families():
        ms = [m for m in measurements if m.family == fam]
        if ms:
            families[fam] = {"lo": min(m.lo for m in ms), "hi": max(m.hi for m in ms),
                             "count": sum(m.count for m in ms), "informative": True}
        else:
            families[fam] = {"lo": 0.0, "hi": 0.0, "count": 0, "informative": False}
        families[fam].update(provenance="DERIVED", source=f"measured by {FAMILIES[fam]}")
    return {
        "format": GOLDEN_FORMAT,
        "version": GOLDEN_VERSION,
        "suite": suite.name,
        "seed": suite.seed,
        "scale": suite.scale_json(),
        "dims": list(suite.dims),
        "functions": list(suite.functions),
        "oracle_max_rel_error": err,
        "families": families,
    }


def dump_goldens(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_goldens(doc: dict, path: Path, overwrite: bool = False) -> Path:
    if path.exists() and not overwrite:
        raise ConfigError(f"{path} exists; pass the overwrite flag to replace it")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_goldens(doc))
    return path


# classification --------------------------------------------------------------------------

def classification_matrix(f: GridFunction, grid: Iterable[Params] | None = None) -> list[dict]:
    """Regime and observed signature for every ``(p, q, alpha)`` cell of the grid."""
    grid = default_classification_grid(f.n) if grid is None else list(grid)
    return [classify_cell(f, prm) for prm in grid]


# summaries -----------------------------------------------------------------------------

def summarize(reports: Sequence[VerificationReport]) -> str:
    by_check: dict[str, list[int]] = {}
    for r in reports:
        c = by_check.setdefault(r.check, [0, 0])
        c[0 if r.passed else 1] += 1
    lines = [f"{'check':32s} {'pass':>6s} {'fail':>6s}"]
    for check in sorted(by_check):
        p, f = by_check[check]
        lines.append(f"{check:32s} {p:6d} {f:6d}")
    total_fail = sum(v[1] for v in by_check.values())
    lines.append(f"{len(reports)} reports, {total_fail} failed")
    for r in reports:
        if not r.passed:
            lines.append(f"FAIL {r.check} {r.function} {r.params} {json.dumps(r.to_json()['measured'])}")
    return "\n".join(lines)


def reports_jsonl(reports: Sequence[VerificationReport]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in reports)


def all_passed(reports: Sequence[VerificationReport]) -> bool:
    return all(r.passed for r in reports)
