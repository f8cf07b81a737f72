"""Acceptance criteria 1 to 9, each asserted on the default verify suite at desk scale."""

import time
from collections import Counter

from conftest import ACCEPTANCE
from jnqkit.checks import CONSTANT_SLACK, IDENTITY_REL
from jnqkit.verify import (
    calibrate,
    dump_goldens,
    get_suite,
    golden_path,
    load_goldens,
    reports_jsonl,
    run_suite,
)

WALL_LIMIT = 300.0


def _select(reports, *checks):
    return [r for r in reports if r.check in checks]


def _record(k, ok, line):
    ACCEPTANCE[k] = (bool(ok), line)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {line}")
    assert ok, line


def _failures(rs):
    return [f"{r.check}/{r.function}/{r.params}" for r in rs if not r.passed]


def test_criterion_1_oscillation_identity(default_run):
    reports, _ = default_run
    rs = _select(reports, "osc_identity")
    qs = Counter(r.params.split("q=")[1] for r in rs)
    cubes = sum(r.measured["cubes"] for r in rs)
    worst = max(r.measured.get("max_identity_rel_error", 0.0) for r in rs)
    ratio_lo = min(r.measured.get("ratio_min", 1.0) for r in rs)
    ratio_hi = max(r.measured.get("ratio_max", 1.0) for r in rs)
    ok = (rs and not _failures(rs) and set(qs) == {"1", "2", "3"}
          and all(r.measured["cubes"] == 20 for r in rs)
          and 1.0 - IDENTITY_REL <= ratio_lo and ratio_hi <= 2.0 and worst <= IDENTITY_REL)
    _record(1, ok, f"{len(rs)} (function, n, q) cases, {int(cubes)} cubes, "
                   f"DD/MO in [{ratio_lo:.15g}, {ratio_hi:.4f}], max |2MO^2-DD^2|/DD^2 {worst:.2g}, failures={_failures(rs)}")


def test_criterion_2_scaling_identity(default_run):
    reports, _ = default_run
    rs = _select(reports, "scaling_identity")
    worst = max(r.measured["rel_error"] for r in rs)
    rs_seen = {r.params.rsplit("r=", 1)[1] for r in rs}
    ps_seen = {r.params.split("p=")[1].split(",")[0] for r in rs}
    ok = rs and not _failures(rs) and worst <= IDENTITY_REL and rs_seen == {"0.5", "2"} \
        and ps_seen == {"1", "2", "4"}
    _record(2, ok, f"{len(rs)} cases, max rel error {worst:.3g} (tol {IDENTITY_REL:g})")


def test_criterion_3_partition_lemma(default_run):
    reports, _ = default_run
    rs = _select(reports, "partition_lemma")
    by_n = {r.params: r.measured for r in rs}
    ok = (set(by_n) == {"n=1", "n=2"} and not _failures(rs)
          and all(m["packings"] == 1000 and m["failures"] == 0 for m in by_n.values())
          and by_n["n=1"]["max_families"] <= 6 and by_n["n=2"]["max_families"] <= 36)
    _record(3, ok, ", ".join(f"{k}: {int(v['packings'])} packings, max families "
                             f"{int(v['max_families'])}/{int(v['bound'])}, failures {int(v['failures'])}"
                             for k, v in sorted(by_n.items())))


def test_criterion_4_optimizers(default_run):
    reports, _ = default_run
    dp = _select(reports, "optimizer_dp")
    tree = _select(reports, "optimizer_tree")
    n_dp = int(sum(r.measured["instances"] for r in dp))
    n_tree = int(sum(r.measured["trees"] for r in tree))
    depths = {r.params.split("depth=")[1] for r in tree if r.params.startswith("n=1")}
    disc = sum(r.measured["discrepancies"] for r in dp + tree)
    ok = dp and tree and disc == 0 and not _failures(dp + tree) and "3" in depths
    _record(4, ok, f"DP vs enumeration: {n_dp} instances; tree DP vs antichains: {n_tree} trees; "
                   f"discrepancies {int(disc)}")


def test_criterion_5_envelopes_and_calibration(default_run):
    reports, _ = default_run
    suite = get_suite("default")
    rs = [r for r in reports if r.check.startswith("envelope_")]
    families = {r.check[len("envelope_"):] for r in rs}
    frozen = load_goldens(suite)
    expected = {k for k, v in frozen["families"].items() if v["informative"]}
    required = {"psi_phi", "psidyasim", "intersection", "extension", "modulus", "integral_packing"}
    in_band = not _failures(rs) and families == expected and required <= families
    doc = calibrate(suite, workers=1)
    reproduced = dump_goldens(doc) == golden_path(suite).read_text()
    _record(5, in_band and reproduced,
            f"{len(rs)} envelope reports over {len(families)} families, failures={_failures(rs)}; "
            f"recalibration bit-exact: {reproduced}")


def test_criterion_6_constant_one_inequalities(default_run):
    reports, _ = default_run
    checks = ("gagliardo_embedding", "dyadic_alpha_monotone", "left_composition", "variant_order")
    rs = _select(reports, *checks)
    present = {r.check for r in rs}
    slack = {t.value for r in rs for t in r.thresholds if t.name == "relative_slack"}
    ok = present == set(checks) and not _failures(rs) and slack == {CONSTANT_SLACK}
    _record(6, ok, f"{len(rs)} inequality reports across {sorted(present)}, slack {CONSTANT_SLACK:g}, "
                   f"failures={_failures(rs)}")


def test_criterion_7_limit(default_run):
    reports, _ = default_run
    seq = _select(reports, "limit_sequence")
    gap = _select(reports, "envelope_limit_gap")
    moving = [r for r in seq if r.function != "constant"]
    names = {r.function for r in moving}
    gap_names = {r.function for r in gap}
    ok = moving and names == gap_names and not _failures(seq + gap)
    _record(7, ok, f"{len(moving)} non-constant p-sequences strictly approach the single-cube sup, "
                   f"{len(gap)} final gaps inside the frozen band, failures={_failures(seq + gap)}")


def test_criterion_8_triviality_probes(default_run):
    reports, _ = default_run
    one = _select(reports, "triviality_probe")
    shell = _select(reports, "shell_probe")
    fired = sum(1 for r in one if r.measured["expected"] == 1.0)
    silent = sum(1 for r in one if r.measured["expected"] == 0.0)
    ok = one and shell and fired and silent and not _failures(one + shell)
    _record(8, ok, f"one-cube probe: {fired} trivial-regime cases fire, {silent} collapse cases silent; "
                   f"shell probe: {len(shell)} blowups above frozen bound; failures={_failures(one + shell)}")


def test_criterion_9_determinism_and_time(default_run):
    reports, wall1 = default_run
    base = reports_jsonl(reports)
    walls = {1: wall1}
    same = {}
    for w in (2, 8):
        t0 = time.perf_counter()
        other = run_suite(get_suite("default"), workers=w)
        walls[w] = time.perf_counter() - t0
        same[w] = reports_jsonl(other) == base
    ok = all(same.values()) and max(walls.values()) < WALL_LIMIT
    _record(9, ok, "identical outputs for workers 1/2/8: "
                   f"{all(same.values())}; wall seconds "
                   + ", ".join(f"{w}w={t:.1f}" for w, t in sorted(walls.items())))
