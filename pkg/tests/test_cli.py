"""Tests for the ionlink command line: outputs, exit codes and manifests."""

import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from math import sqrt
from pathlib import Path

import jsonschema

from ionlink.cli import run
from ionlink.reports import MANIFEST_NAME, file_digest, load_schema


def _run(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run(list(argv))
    return code, out.getvalue(), err.getvalue()


def _json(*argv: str) -> dict:
    code, out, err = _run(*argv)
    if code != 0:
        raise AssertionError(f"exit {code}: {err}")
    return json.loads(out)


class TestHerald(unittest.TestCase):
    """ionlink herald"""

    def test_ideal_attempt(self):
        doc = _json("herald", "--ideal")
        jsonschema.validate(doc, load_schema("herald"))
        by_class = {r["herald_class"]: r for r in doc["results"]}
        self.assertAlmostEqual(by_class["PsiMinus"]["probability"], 0.25, delta=1e-10)
        self.assertAlmostEqual(by_class["PsiPlus"]["probability"], 0.25, delta=1e-10)
        self.assertAlmostEqual(by_class["PsiMinus"]["fidelity"], 1.0, delta=1e-10)
        self.assertIsNone(by_class["NoHerald"]["fidelity"])

    def test_ion_states_are_reported(self):
        doc = _json("herald", "--ideal")
        by_class = {r["herald_class"]: r for r in doc["results"]}
        for result in doc["results"]:
            self.assertEqual(result["ion_state"] is None, result["probability"] <= 0.0)
        singlet = by_class["PsiMinus"]["ion_state"]
        self.assertEqual(len(singlet["real"]), 4)
        self.assertAlmostEqual(sum(singlet["real"][i][i] for i in range(4)), 1.0, delta=1e-12)

    def test_ideal_rejects_channel_flags(self):
        code, out, err = _run("herald", "--ideal", "--distance-km", "10")
        self.assertEqual(code, 1)
        self.assertEqual(out, "")
        self.assertIn("InvalidConfigError", err)
        self.assertIn("--distance-km", err)

    def test_ideal_warns_about_preset(self):
        code, _, err = _run("herald", "--ideal", "--preset", "paper-3mm")
        self.assertEqual(code, 0)
        self.assertIn("--ideal ignores preset paper-3mm", err)

    def test_distinguishable_photons(self):
        doc = _json("herald", "--offset", "1")
        by_class = {r["herald_class"]: r for r in doc["results"]}
        self.assertAlmostEqual(by_class["PsiMinus"]["fidelity"], 0.5, delta=1e-10)
        self.assertEqual(doc["pair_overlap"], 0.0)

    def test_lossy_arms(self):
        doc = _json("herald", "--distance-km", "10")
        self.assertAlmostEqual(doc["herald_probability"], 0.05, delta=1e-10)

    def test_table_format(self):
        code, out, _ = _run("herald", "--ideal", "--format", "table")
        self.assertEqual(code, 0)
        self.assertIn("PsiMinus", out)
        self.assertIn("herald_class", out.splitlines()[0])


class TestRate(unittest.TestCase):
    """ionlink rate"""

    def test_three_millimetre_preset(self):
        doc = _json("rate", "--preset", "paper-3mm")
        jsonschema.validate(doc, load_schema("rate"))
        self.assertGreater(doc["pairs_per_minute"], 4.5)
        self.assertLess(doc["pairs_per_minute"], 5.5)
        self.assertTrue(doc["time_to_pairs"]["feasible"])

    def test_one_millimetre_preset(self):
        doc = _json("rate", "--preset", "paper-1mm")
        self.assertGreater(doc["pairs_per_second"], 2.6)
        self.assertLess(doc["pairs_per_second"], 3.3)

    def test_zero_emission_is_infeasible(self):
        doc = _json("rate", "--p-cav", "0")
        jsonschema.validate(doc, load_schema("rate"))
        self.assertFalse(doc["time_to_pairs"]["feasible"])
        self.assertIsNone(doc["time_to_pairs"]["seconds"])

    def test_flag_beats_config_beats_preset(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text(json.dumps({"budget": {"p_cav": 0.06}}), encoding="utf-8")
            from_config = _json("rate", "--preset", "paper-3mm", "--config", str(cfg))
            from_flag = _json("rate", "--preset", "paper-3mm", "--config", str(cfg), "--p-cav", "0.01")
        one_mm = _json("rate", "--preset", "paper-1mm")
        three_mm = _json("rate", "--preset", "paper-3mm")
        self.assertAlmostEqual(from_config["pairs_per_second"], one_mm["pairs_per_second"], places=12)
        self.assertAlmostEqual(from_flag["pairs_per_second"], three_mm["pairs_per_second"], places=12)

    def test_length_sweep_is_csv(self):
        code, out, _ = _run("rate", "--sweep", "0.001,0.003,0.01")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "length,p_cav,pairs_per_second,pairs_per_minute")
        self.assertEqual(len(lines), 4)

    def test_length_sweep_defaults(self):
        code, out, _ = _run("rate", "--sweep")
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], "length,p_cav,pairs_per_second,pairs_per_minute")
        self.assertEqual(len(out.splitlines()), 22)

    def test_markdown_format(self):
        code, out, _ = _run("rate", "--format", "markdown")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("|"))
        self.assertIn("pairs_per_minute", out)


class TestTiming(unittest.TestCase):
    """ionlink timing"""

    def test_preset_passes(self):
        doc = _json("timing", "--preset", "paper-10km")
        jsonschema.validate(doc, load_schema("timing"))
        self.assertTrue(doc["passed"])
        self.assertAlmostEqual(doc["max_detection_window"] * 1e6, 33.356, delta=0.01)

    def test_failed_constraint_is_a_result_not_an_error(self):
        code, out, _ = _run("timing", "--preset", "paper-10km", "--choice-delay", "0", "--rotation", "10e-6")
        self.assertEqual(code, 0)
        doc = json.loads(out)
        checks = {c["name"]: c["passed"] for c in doc["checks"]}
        self.assertEqual(checks, {"i": True, "ii": True, "iii": False})
        self.assertFalse(doc["passed"])

    def test_sweep(self):
        code, out, _ = _run(
            "timing", "--preset", "paper-10km", "--sweep", "choice_delay", "--values", "0,1e-5"
        )
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertTrue(lines[0].startswith("parameter,value,passed"))
        self.assertEqual(len(lines), 3)

    def test_sweep_without_values(self):
        code, _, err = _run("timing", "--sweep", "choice_delay")
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])["error"], "InvalidConfigError")


class TestChsh(unittest.TestCase):
    """ionlink chsh"""

    def test_ideal_singlet(self):
        doc = _json("chsh", "--trials", "20000", "--seed", "7")
        jsonschema.validate(doc, load_schema("chsh"))
        self.assertAlmostEqual(doc["analytic"]["s"], -2 * sqrt(2), delta=1e-10)
        self.assertEqual(doc["monte_carlo"]["trials"], 20000)
        self.assertAlmostEqual(doc["readout"]["expected_counts"], 29.9, delta=0.1)

    def test_heralded_state(self):
        doc = _json("chsh", "--state", "herald", "--trials", "5000")
        self.assertAlmostEqual(abs(doc["analytic"]["s"]), 2 * sqrt(2), delta=1e-10)

    def test_depolarized_state(self):
        doc = _json("chsh", "--depolarize", "0.2", "--trials", "5000")
        self.assertAlmostEqual(doc["analytic"]["s"], -2 * sqrt(2) * 0.64, delta=1e-10)

    def test_state_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rho.json"
            mixed = [[0.25 if i == j else 0.0 for j in range(4)] for i in range(4)]
            path.write_text(json.dumps({"real": mixed}), encoding="utf-8")
            doc = _json("chsh", "--state", str(path), "--trials", "5000")
        self.assertAlmostEqual(doc["analytic"]["s"], 0.0, delta=1e-12)

    def test_invalid_state_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rho.json"
            path.write_text(json.dumps({"real": [[1, 0], [0, 0]]}), encoding="utf-8")
            code, _, _ = _run("chsh", "--state", str(path))
        self.assertEqual(code, 1)

    def test_config_is_echoed(self):
        doc = _json("chsh", "--trials", "20000", "--seed", "7")
        jsonschema.validate(doc, load_schema("chsh"))
        echo = doc["config"]
        self.assertEqual(echo["state"], "ideal")
        self.assertEqual(echo["chsh"]["trials"], 20000)
        self.assertEqual(echo["chsh"]["rng_seed"], 7)
        self.assertEqual(echo["rng_seed"], 7)
        self.assertEqual(echo["depolarize"], 0.0)

    def test_herald_report_feeds_chsh(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text(json.dumps({"channel_b": {"overlap": 0.5}}), encoding="utf-8")
            out = Path(tmp) / "herald"
            code, _, _ = _run("herald", "--config", str(cfg), "--out", str(out))
            self.assertEqual(code, 0)
            report = json.loads((out / "herald.json").read_text(encoding="utf-8"))
            jsonschema.validate(report, load_schema("herald"))

            from_file = _json("chsh", "--state", str(out / "herald.json"), "--trials", "5000")
            in_process = _json("chsh", "--state", "herald", "--config", str(cfg), "--trials", "5000")

        jsonschema.validate(from_file, load_schema("chsh"))
        self.assertAlmostEqual(from_file["analytic"]["s"], in_process["analytic"]["s"], places=10)
        self.assertLess(abs(from_file["analytic"]["s"]), 2 * sqrt(2) - 0.1)
        self.assertEqual(from_file["config"]["herald_class"], "PsiMinus")
        self.assertEqual(in_process["config"]["state"], "herald")
        self.assertEqual(in_process["config"]["attempt"]["channel_b"]["overlap"], 0.5)

    def test_herald_class_selects_the_state(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = _run("herald", "--ideal", "--out", tmp)
            self.assertEqual(code, 0)
            path = str(Path(tmp) / "herald.json")
            doc = _json("chsh", "--state", path, "--herald-class", "PsiPlus", "--trials", "5000")
        self.assertEqual(doc["config"]["herald_class"], "PsiPlus")
        self.assertLessEqual(abs(doc["analytic"]["s"]), 2 * sqrt(2) + 1e-10)

    def test_herald_report_without_the_class(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "herald.json"
            path.write_text(json.dumps({"results": []}), encoding="utf-8")
            code, _, err = _run("chsh", "--state", str(path))
        self.assertEqual(code, 1)
        self.assertIn("InvalidSettingError", err)

    def test_too_few_trials(self):
        code, _, err = _run("chsh", "--trials", "2")
        self.assertEqual(code, 1)
        self.assertIn("InsufficientDataError", err)


class TestSweeps(unittest.TestCase):
    """cavity-scan, hom and phase-sweep"""

    def test_cavity_scan(self):
        code, out, _ = _run("cavity-scan", "--lengths", "0.003")
        self.assertEqual(code, 0)
        header, row = out.splitlines()
        p_cav = float(row.split(",")[header.split(",").index("p_cav")])
        self.assertAlmostEqual(p_cav / 0.01, 1.0, delta=0.15)

    def test_hom_default_grid(self):
        code, out, _ = _run("hom")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "overlap,coincidence_probability")
        self.assertEqual(len(lines), 12)

    def test_hom_as_json(self):
        doc = _json("hom", "--overlaps", "0,1", "--format", "json")
        jsonschema.validate(doc, load_schema("table"))
        self.assertEqual(doc["columns"], ["overlap", "coincidence_probability"])
        (low, dip_low), (high, dip_high) = doc["rows"]
        self.assertEqual((low, high), (0.0, 1.0))
        self.assertAlmostEqual(dip_low, 0.5, delta=1e-12)
        self.assertAlmostEqual(dip_high, 0.0, delta=1e-12)

    def test_phase_sweep(self):
        code, out, _ = _run("phase-sweep", "--points", "3", "--threads", "2")
        self.assertEqual(code, 0)
        self.assertEqual(len(out.splitlines()), 1 + 2 * 9)


class TestExitCodes(unittest.TestCase):
    """Usage and validation errors."""

    def test_unknown_flag(self):
        code, _, _ = _run("rate", "--warp")
        self.assertEqual(code, 2)

    def test_missing_subcommand(self):
        code, _, _ = _run()
        self.assertEqual(code, 2)

    def test_version(self):
        code, out, _ = _run("--version")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("ionlink "))

    def test_invalid_probability_reports_json_error(self):
        code, out, err = _run("rate", "--p-cav", "2")
        self.assertEqual(code, 1)
        self.assertEqual(out, "")
        doc = json.loads(err.strip().splitlines()[-1])
        jsonschema.validate(doc, load_schema("error"))
        self.assertEqual(doc["error"], "InvalidBudgetError")

    def test_zero_points_is_a_usage_error(self):
        for command in ("hom", "phase-sweep"):
            code, _, _ = _run(command, "--points", "0")
            self.assertEqual(code, 2)

    def test_bad_thread_count(self):
        code, _, _ = _run("hom", "--threads", "0")
        self.assertEqual(code, 1)

    def test_malformed_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text("{", encoding="utf-8")
            code, _, err = _run("rate", "--config", str(cfg))
        self.assertEqual(code, 1)
        self.assertIn("InvalidConfigError", err)

    def test_unknown_config_section(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text(json.dumps({"budgte": {}}), encoding="utf-8")
            code, _, err = _run("rate", "--config", str(cfg))
        self.assertEqual(code, 1)
        self.assertIn("budgte", err)

    def test_unknown_config_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text(json.dumps({"budget": {"pcav": 0.1}}), encoding="utf-8")
            code, _, _ = _run("rate", "--config", str(cfg))
        self.assertEqual(code, 1)

    def test_missing_config_file(self):
        code, _, _ = _run("rate", "--config", "/nonexistent/cfg.json")
        self.assertEqual(code, 1)


class TestOutputDirectory(unittest.TestCase):
    """--out writes the primary output and a manifest."""

    def test_manifest_describes_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = _run("rate", "--preset", "paper-3mm", "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(out, "")
            manifest = json.loads((Path(tmp) / MANIFEST_NAME).read_text(encoding="utf-8"))
            jsonschema.validate(manifest, load_schema("manifest"))
            self.assertEqual(manifest["subcommand"], "rate")
            self.assertIsNone(manifest["rng_seed"])
            self.assertEqual(manifest["outputs"], {"rate.json": file_digest(Path(tmp) / "rate.json")})
            self.assertEqual(manifest["config"]["budget"]["p_cav"], 0.01)

    def test_sweep_writes_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = _run("hom", "--out", tmp)
            self.assertEqual(code, 0)
            manifest = json.loads((Path(tmp) / MANIFEST_NAME).read_text(encoding="utf-8"))
            self.assertEqual(list(manifest["outputs"]), ["hom.csv"])

    def test_seeded_runs_are_byte_identical(self):
        digests = []
        seeds = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                code, _, _ = _run("chsh", "--trials", "20000", "--seed", "7", "--out", tmp)
                self.assertEqual(code, 0)
                manifest = json.loads((Path(tmp) / MANIFEST_NAME).read_text(encoding="utf-8"))
                digests.append(manifest["outputs"]["chsh.json"])
                seeds.append(manifest["rng_seed"])
        self.assertEqual(digests[0], digests[1])
        self.assertEqual(seeds, [7, 7])

    def test_thread_count_does_not_change_output(self):
        outputs = []
        for threads in ("1", "3"):
            code, out, _ = _run("chsh", "--trials", "200000", "--seed", "11", "--threads", threads)
            self.assertEqual(code, 0)
            outputs.append(out)
        self.assertEqual(outputs[0], outputs[1])
