import json
from dataclasses import replace

import pytest

from jnqkit.catalog import make_function
from jnqkit.checks import CHECKS, FAMILIES, classify_cell, probe_fires, shell_statistic
from jnqkit.core import ConfigError, Params
from jnqkit.verify import (
    GOLDEN_ENV,
    calibrate,
    classification_matrix,
    dump_goldens,
    get_suite,
    golden_path,
    load_goldens,
    reports_jsonl,
    run_suite,
    summarize,
    with_tolerances,
    write_goldens,
)


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv(GOLDEN_ENV, raising=False)


def small_suite(name="constant", checks=("modulus", "shell_probe"), functions=("step",), seed=3):
    return replace(get_suite(name, seed=seed, dims=(1,), functions=functions), checks=checks)


class TestSuites:
    def test_empty_suite(self, tmp_path):
        assert run_suite(get_suite("empty"), golden_directory=tmp_path) == []

    def test_unknown_suite(self):
        with pytest.raises(ConfigError):
            get_suite("nightly")

    def test_unknown_check_or_function(self):
        with pytest.raises(ConfigError):
            replace(get_suite("empty"), checks=("nonsense",))
        with pytest.raises(ConfigError):
            get_suite("default", functions=("cosine",))

    def test_every_family_has_a_producer(self):
        assert set(FAMILIES.values()) <= set(CHECKS)
        assert get_suite("default").families() == sorted(FAMILIES)

    def test_identities_need_no_goldens(self, tmp_path):
        suite = get_suite("identities", dims=(1,), functions=("step", "random"))
        reports = run_suite(suite, golden_directory=tmp_path)
        assert reports and all(r.passed for r in reports)
        assert {r.check for r in reports} == {"osc_identity", "scaling_identity"}
        assert all(t.provenance == "PAPER" for r in reports for t in r.thresholds)

    def test_tolerance_plumbing(self, tmp_path):
        suite = get_suite("identities", dims=(1,), functions=("random",))
        with pytest.raises(ConfigError):
            with_tolerances(suite, {"made_up": 1.0})
        strict = with_tolerances(suite, {"identity_rel": -1.0})
        assert not any(r.passed for r in run_suite(strict, golden_directory=tmp_path)
                       if r.check == "scaling_identity")

    def test_reports_sorted_and_serializable(self, tmp_path):
        suite = get_suite("identities", dims=(1,), functions=("bump", "step"))
        reports = run_suite(suite, golden_directory=tmp_path)
        keys = [(r.sort_key(), r.digest) for r in reports]
        assert keys == sorted(keys)
        for line in reports_jsonl(reports).splitlines():
            assert json.loads(line)["status"] == "pass"
        assert summarize(reports).splitlines()[-1].endswith("0 failed")


class TestGoldens:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="missing"):
            run_suite(get_suite("default"), golden_directory=tmp_path)

    @pytest.mark.parametrize("mutation", [
        lambda d: "{ not json",
        lambda d: json.dumps({**d, "format": "other"}),
        lambda d: json.dumps({**d, "version": 99}),
        lambda d: json.dumps({**d, "seed": 12}),
        lambda d: json.dumps({**d, "families": {"modulus": {"lo": 2.0, "hi": 1.0, "provenance": "DERIVED"}}}),
        lambda d: json.dumps({**d, "families": {"modulus": {"lo": 0.0, "hi": 1.0, "provenance": "PAPER"}}}),
        lambda d: json.dumps({k: v for k, v in d.items() if k != "families"}),
    ])
    def test_corrupted_file(self, tmp_path, mutation):
        suite = get_suite("constant")
        doc = json.loads(golden_path(suite).read_text())
        (tmp_path / golden_path(suite).name).write_text(mutation(doc))
        with pytest.raises(ConfigError):
            load_goldens(suite, tmp_path)

    def test_env_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv(GOLDEN_ENV, str(tmp_path))
        assert golden_path(get_suite("default")).parent == tmp_path

    def test_packaged_goldens_load(self):
        for name in ("default", "constant"):
            doc = load_goldens(get_suite(name))
            assert set(doc["families"]) == set(FAMILIES)
            assert doc["oracle_max_rel_error"] <= 1e-6

    def test_constant_suite_bands(self):
        fams = load_goldens(get_suite("constant"))["families"]
        informative = {k for k, v in fams.items() if v["informative"]}
        # the zero extension of a constant is not constant, so only these measure anything
        assert informative == {"modulus", "shell_control"}
        for k, v in fams.items():
            if k not in informative:
                assert (v["lo"], v["hi"], v["count"]) == (0.0, 0.0, 0)

    def test_uninformative_band_cannot_be_used(self, tmp_path):
        suite = small_suite()
        doc = calibrate(suite)
        doc["families"]["modulus"]["informative"] = False
        with pytest.raises(ConfigError):
            run_suite(suite, goldens=doc)

    def test_calibration_reproducible_and_detects_drift(self, tmp_path):
        suite = small_suite()
        a, b = calibrate(suite), calibrate(suite)
        assert dump_goldens(a) == dump_goldens(b)
        assert set(a["families"]) == {"modulus", "shell_control"}
        assert all(v["informative"] for v in a["families"].values())
        path = write_goldens(a, golden_path(suite, tmp_path))
        with pytest.raises(ConfigError):
            write_goldens(a, path)
        assert all(r.passed for r in run_suite(suite, golden_directory=tmp_path))
        narrowed = json.loads(path.read_text())
        band = narrowed["families"]["modulus"]
        band["hi"] = band["lo"] + 0.25 * (band["hi"] - band["lo"])
        failed = [r for r in run_suite(suite, goldens=narrowed) if not r.passed]
        assert failed and all(r.check == "envelope_modulus" for r in failed)

    def test_workers_do_not_change_reports(self, tmp_path):
        suite = small_suite(checks=("modulus", "optimizer_dp", "osc_identity"), functions=("random", "log"))
        doc = calibrate(suite)
        one = reports_jsonl(run_suite(suite, workers=1, goldens=doc))
        three = reports_jsonl(run_suite(suite, workers=3, goldens=doc))
        assert one == three


class TestClassification:
    def test_step_matrix(self):
        f = make_function("step", 1, 6)
        rows = classification_matrix(f)
        assert all(r["observed"] is not False for r in rows)
        regimes = {r["regime"] for r in rows}
        assert {"divergent", "embedding", "collapse to JN_con", "trivial (p<q)"} <= regimes
        for r in rows:
            if r["p"] < r["q"] and r["alpha"] != -1 / r["q"] and r["regime"] != "divergent":
                assert r["regime"] == "trivial (p<q)" and r["observed"] is True
            if r["alpha"] == -1 / r["q"]:
                assert r["signature"].startswith("JN_con sandwich")

    def test_embedding_cell(self):
        row = classify_cell(make_function("random", 1, 6, seed=1), Params(4.0, 2.0, 0.1))
        assert row["regime"] == "embedding" and row["observed"] is True

    def test_probe_behaviour(self):
        assert probe_fires([1.0, 1.1, 1.3, 1.8])
        assert not probe_fires([1.0, 1.1, 1.1, 1.2])
        assert not probe_fires([3.0, 2.0, 1.0, 0.5])

    def test_shell_statistic_separates(self):
        f = make_function("bump", 1, 6)
        control = shell_statistic(f, 0.25, 2.0)
        blown = shell_statistic(f, 0.0, 2.0)
        assert control < blown and blown >= 13.0 - 1e-9
