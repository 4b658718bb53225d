import copy
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import unittest
from pathlib import Path

from cascade_lab.core.errors import ConfigValidationError
from cascade_lab.scenarios.scenario import (SCENARIO_DIR, dump_scenario, find_scenario, load_scenario,
                                            parse_scenario, save_scenario, scenario_to_dict)
from cascade_lab.systems.couplings import FamilyKind

BASE = {
    "name": "two_mode",
    "family": "Z",
    "s": 2.0,
    "L": 64,
    "pipeline": "full",
    "source": {"kind": "analytic", "N": 1.0, "E": 0.5},
    "integrator": {"rel_tol": 1e-10, "stop": {"t_end": 1.0}},
    "outputs": {"bands": [[0, 0], [1, 16]]},
}

class TestScenarioParsing(unittest.TestCase):
    def setUp(self):
        self.data = copy.deepcopy(BASE)

    def assertField(self, field):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_scenario(self.data)
        self.assertEqual(ctx.exception.field, field)

    def test_valid_document(self):
        cfg = parse_scenario(self.data)
        self.assertEqual(cfg.family, FamilyKind.Z)
        self.assertEqual(cfg.source.N, 1.0)
        self.assertEqual(cfg.integrator.stop.t_end, 1.0)
        self.assertEqual(cfg.outputs.bands, ((0, 0), (1, 16)))
        self.assertEqual(cfg.outputs.sobolev_xi, (0.5, 0.75, 1.0, 1.5))

    def test_unknown_field(self):
        self.data["colour"] = "red"
        self.assertField("colour")

    def test_missing_source_field(self):
        del self.data["source"]["E"]
        self.assertField("source.E")

    def test_nested_stop_field(self):
        self.data["integrator"]["stop"]["t_end"] = -1.0
        self.assertField("integrator.stop.t_end")

    def test_overlapping_bands(self):
        self.data["outputs"]["bands"] = [[0, 4], [3, 8]]
        self.assertField("outputs.bands[1]")

    def test_band_beyond_truncation(self):
        self.data["outputs"]["bands"] = [[0, 65]]
        self.assertField("outputs.bands[0]")

    def test_theta_grid_too_coarse(self):
        self.data["outputs"]["theta_grid"] = 100
        self.assertField("outputs.theta_grid")

    def test_pipeline_needs_matching_source(self):
        self.data["pipeline"] = "analytic"
        self.data["source"] = {"kind": "random", "N": 1.0}
        self.assertField("source.kind")

    def test_beta_only_for_deformed_family(self):
        self.data["beta"] = 0.5
        self.assertField("beta")

    def test_type_errors(self):
        self.data["L"] = True
        self.assertField("L")
        self.data["L"] = 64
        self.data["family"] = "W"
        self.assertField("family")

    def test_explicit_y_energy_is_fixed(self):
        self.data.update(family="Y", source={"kind": "analytic", "N": 1.0, "E": 0.5})
        self.assertField("source.E")

    def test_round_trip_through_toml(self):
        cfg = parse_scenario(self.data)
        self.assertEqual(parse_scenario(scenario_to_dict(cfg)), cfg)
        self.assertEqual(parse_scenario(tomllib.loads(dump_scenario(cfg))), cfg)

class TestScenarioFiles(unittest.TestCase):
    def test_bundled_scenarios_parse(self):
        names = sorted(p.stem for p in SCENARIO_DIR.glob("*.toml"))
        self.assertIn("z_condensation", names)
        for name in names:
            cfg = load_scenario(find_scenario(name))
            self.assertEqual(cfg.name, name)

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigValidationError):
            find_scenario("no_such_scenario")

    def test_save_and_load(self):
        cfg = parse_scenario(copy.deepcopy(BASE))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "saved.toml"
            save_scenario(cfg, path)
            self.assertEqual(load_scenario(path), cfg)
            path.write_text("name = [unclosed")
            with self.assertRaises(ConfigValidationError):
                load_scenario(path)

if __name__ == '__main__':
    unittest.main()
