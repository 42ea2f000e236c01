import json
import logging
import math
import os
import tempfile
import unittest

from typer.testing import CliRunner

from sln_atlas.cli import EXIT_AMBIGUOUS, EXIT_INVALID, EXIT_NOT_EQUIVALENT, app
from sln_atlas.codec import dumps_canonical
from sln_atlas.config import TOL_MATCH_ENV

from . import fixture

runner = CliRunner()

# residues differ from those of sin by 5e-6, between tol_match and 10 x tol_match
SCALED_SINE = {"schema": "field/v1", "kind": "trig", "a0": 0, "cos": [0], "sin": [1.000005]}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def invoke(self, *args, env=None):
        return runner.invoke(app, list(args), env={TOL_MATCH_ENV: None, **(env or {})})

    def run_ok(self, *args, env=None):
        result = self.invoke(*args, env=env)
        self.assertEqual(result.exit_code, 0, result.output)
        return json.loads(result.stdout)

    def write(self, name, obj):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as f:
            f.write(dumps_canonical(obj))
        return path


class TestInvariantsCommand(CliTestCase):
    def test_sine(self) -> None:
        report = self.run_ok("invariants", fixture("sin.json"))

        self.assertEqual(report["k"], 2)
        self.assertEqual([z["m"] for z in report["zeros"]], [1, 1])
        self.assertAlmostEqual(report["zeros"][0]["theta"], 0.0, delta=1e-9)
        self.assertAlmostEqual(report["zeros"][1]["theta"], math.pi, delta=1e-9)
        self.assertAlmostEqual(report["zeros"][0]["r"], 1.0, delta=1e-9)
        self.assertAlmostEqual(report["zeros"][1]["r"], -1.0, delta=1e-9)
        self.assertAlmostEqual(report["mu"], 0.0, delta=1e-6)
        self.assertEqual(report["canonical_key"]["k"], 2)

    def test_constant(self) -> None:
        report = self.run_ok("invariants", fixture("const_half.json"))

        self.assertEqual((report["k"], report["sigma"], report["zeros"]), (0, 1, []))
        self.assertAlmostEqual(report["mu"], 4 * math.pi, delta=1e-9)

    def test_interval_field(self) -> None:
        report = self.run_ok("invariants", fixture("half_parabola.json"))

        self.assertEqual(report["kind"], "interval")
        self.assertEqual([record["t"] for record in report["records"]], [-1, 1])
        self.assertEqual(len(report["gaps"]), 1)

    def test_csv(self) -> None:
        path = os.path.join(self.tmp.name, "samples.csv")
        self.run_ok("invariants", fixture("sin.json"), "--csv", path)

        with open(path) as f:
            lines = f.read().splitlines()
        self.assertEqual(len(lines), 1025)
        self.assertEqual(lines[0], "theta,f")

    def test_invalid_input(self) -> None:
        self.assertEqual(self.invoke("invariants", fixture("malformed.json")).exit_code, EXIT_INVALID)
        self.assertEqual(self.invoke("invariants", fixture("action_hopf_1.json")).exit_code, EXIT_INVALID)
        self.assertEqual(self.invoke("invariants", fixture("missing.json")).exit_code, EXIT_INVALID)
        self.assertEqual(self.invoke("invariants", fixture("sin.json"), "--tol-zero", "0").exit_code, EXIT_INVALID)


class TestEquivCommand(CliTestCase):
    def test_equivalent_actions(self) -> None:
        sphere = fixture("action_standard_sphere.json")
        result = self.run_ok("equiv", sphere, sphere)

        self.assertTrue(result["equivalent"])
        self.assertEqual(result["summaries"][0]["manifold"], "S^n")

    def test_hopf_actions(self) -> None:
        result = self.invoke("equiv", fixture("action_hopf_1.json"), fixture("action_hopf_2.json"))

        self.assertEqual(result.exit_code, EXIT_NOT_EQUIVALENT)

    def test_ambiguous_fields(self) -> None:
        scaled = self.write("scaled.json", SCALED_SINE)
        sine = fixture("sin.json")

        self.assertEqual(self.invoke("equiv", sine, scaled).exit_code, EXIT_AMBIGUOUS)
        self.assertTrue(self.run_ok("equiv", sine, scaled, env={TOL_MATCH_ENV: "1e-5"})["equivalent"])
        self.assertTrue(self.run_ok("equiv", sine, scaled, "--tol-match", "1e-5")["equivalent"])

    def test_config_file(self) -> None:
        scaled = self.write("scaled.json", SCALED_SINE)
        config = os.path.join(self.tmp.name, "tolerances.yaml")
        with open(config, "w") as f:
            f.write("tol_match: 1.0e-5\n")

        self.assertTrue(self.run_ok("--config", config, "equiv", fixture("sin.json"), scaled)["equivalent"])

    def test_intervals(self) -> None:
        parabola = fixture("half_parabola.json")

        self.assertTrue(self.run_ok("equiv", parabola, parabola, "--allow-flip")["equivalent"])
        self.assertEqual(self.invoke("equiv", parabola, fixture("sphere_interval.json")).exit_code, EXIT_NOT_EQUIVALENT)

    def test_mismatched_inputs(self) -> None:
        self.assertEqual(self.invoke("equiv", fixture("sin.json"), fixture("graph_disk.json")).exit_code, EXIT_INVALID)
        self.assertEqual(
            self.invoke("equiv", fixture("sin.json"), fixture("half_parabola.json")).exit_code, EXIT_INVALID
        )

    def test_graphs(self) -> None:
        disk = fixture("graph_disk.json")

        self.assertEqual(self.run_ok("equiv", disk, disk)["levels"], [1, 1])
        self.assertEqual(self.invoke("equiv", disk, fixture("graph_blowup.json")).exit_code, EXIT_NOT_EQUIVALENT)


class TestClassifyCommand(CliTestCase):
    def test_standard_sphere(self) -> None:
        summary = self.run_ok("classify", fixture("action_standard_sphere.json"))

        self.assertEqual(summary["type"], "II")
        self.assertEqual(summary["manifold"], "S^n")
        self.assertEqual(summary["fixed_points"], 2)
        self.assertTrue(summary["admits_projective"])
        self.assertFalse(summary["is_hopf"])

    def test_type_I(self) -> None:
        hopf = self.run_ok("classify", fixture("action_hopf_1.json"))
        zero = self.run_ok("classify", fixture("action_case2_zero.json"))

        self.assertEqual((hopf["type"], hopf["case"], hopf["n"]), ("I", 2, 3))
        self.assertTrue(hopf["is_hopf"])
        self.assertEqual(zero["manifold"], "RP^{n-1} x S^1")
        self.assertFalse(zero["is_hopf"])

    def test_transitive(self) -> None:
        summary = self.run_ok("classify", fixture("action_transitive_hopf.json"))

        self.assertEqual((summary["type"], summary["manifold"]), ("transitive", "(R^n - 0)/<2>"))
        self.assertTrue(summary["admits_projective"])

    def test_wrong_schema(self) -> None:
        self.assertEqual(self.invoke("classify", fixture("sin.json")).exit_code, EXIT_INVALID)


class TestLatticeCommands(CliTestCase):
    def test_check(self) -> None:
        report = self.run_ok("lattice", "check", fixture("graph_disk.json"))

        self.assertEqual(report, {"valid": True, "diagnostics": []})

    def test_check_reports_violations(self) -> None:
        bad = self.write(
            "bad.json",
            {
                "schema": "graph/v1",
                "n": 3,
                "nodes": [{"id": "t0", "marked_points": [["1", "0", "0"]]}],
                "attachments": [],
            },
        )

        self.assertEqual(self.invoke("lattice", "check", bad).exit_code, EXIT_INVALID)
        self.assertEqual(self.invoke("lattice", "level", bad).exit_code, EXIT_INVALID)

    def test_structurally_wrong_graph(self) -> None:
        graph = {"schema": "graph/v1", "n": 3, "attachments": []}
        for nodes in (5, [{"id": "t0", "marked_points": [7]}]):
            bad = self.write("bad.json", {**graph, "nodes": nodes})
            for args in (("lattice", "level", bad), ("equiv", bad, bad)):
                with self.subTest(nodes=nodes, command=args[0]):
                    result = self.invoke(*args)

                    self.assertEqual(result.exit_code, EXIT_INVALID, result.output)
                    self.assertIsInstance(result.exception, SystemExit)

    def test_level(self) -> None:
        self.assertEqual(self.run_ok("lattice", "level", fixture("graph_level.json")), {"level": 2})
        self.assertEqual(self.run_ok("lattice", "level", fixture("graph_disk.json")), {"level": 1})

    def test_volume(self) -> None:
        self.assertTrue(self.run_ok("lattice", "volume", fixture("graph_blowup.json"))["volume_preserving"])
        self.assertFalse(self.run_ok("lattice", "volume", fixture("graph_disk.json"))["volume_preserving"])

    def test_topology(self) -> None:
        (component,) = self.run_ok("lattice", "topology", fixture("graph_tube_pair.json"))["components"]

        self.assertEqual(component["label"], "connected sum of 2 tori")
        self.assertEqual(component["nodes"], ["t0", "t1"])
        self.assertFalse(component["extension"])

    def test_equiv(self) -> None:
        pair = fixture("graph_tube_pair.json")

        self.assertTrue(self.run_ok("lattice", "equiv", pair, pair)["equivalent"])
        self.assertEqual(
            self.invoke("lattice", "equiv", pair, fixture("graph_disk.json")).exit_code, EXIT_NOT_EQUIVALENT
        )


if __name__ == "__main__":
    unittest.main()
