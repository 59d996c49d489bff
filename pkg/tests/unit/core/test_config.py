import tempfile
import unittest
from pathlib import Path

import pytest

from nax_forecast.core.config import DEFAULT_CONFIG_PATH, ConfigException, RunConfig, flatten, parse_override
from nax_forecast.core.models import FULL_SERIES, Activation
from nax_forecast.core.models.segmentation import DateRange


def write_config(directory: str, text: str) -> Path:
    path = Path(directory) / "config.yml"
    path.write_text(text, encoding="utf-8")
    return path


def test_flatten():
    assert flatten({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {"a.b": 1, "a.c.d": 2, "e": 3}


@pytest.mark.parametrize("assignment, expected", [
    ("seed=7", {"seed": 7}),
    ("nax.l2=0.001", {"nax.l2": 0.001}),
    ("grid.neurons=[3, 5]", {"grid.neurons": [3, 5]}),
    ("holidays.include_floating=true", {"holidays.include_floating": True}),
    (" data.daily = daily.csv", {"data.daily": "daily.csv"}),
])
def test_parse_override(assignment, expected):
    assert parse_override(assignment) == expected


@pytest.mark.parametrize("assignment", ["seed", "=3", ""])
def test_parse_override_invalid(assignment):
    pytest.raises(ConfigException, parse_override, assignment)


class DefaultConfigTest(unittest.TestCase):

    def setUp(self):
        self.config = RunConfig(DEFAULT_CONFIG_PATH)

    def test_segmentation(self):
        """
        GIVEN the shipped configuration
        WHEN the segmentation is built
        THEN calibration is 2007-2010, validation 2011, test 2012 and robustness one range per year of 2013-2016
        """
        segmentation = self.config.segmentation()

        self.assertEqual(DateRange.for_years(2007, 2010), segmentation.calibration)
        self.assertEqual(DateRange.for_years(2011), segmentation.validation)
        self.assertEqual(DateRange.for_years(2012), segmentation.test)
        self.assertEqual([DateRange.for_years(y) for y in range(2013, 2017)], segmentation.robustness)

    def test_grid_spec(self):
        """
        GIVEN the shipped configuration
        WHEN the grid is built
        THEN it's the full 4608 combination grid
        """
        grid = self.config.grid_spec()

        self.assertEqual(4608, len(grid))
        self.assertEqual((Activation.SOFTMAX, Activation.SIGMOID), grid.activation)
        self.assertEqual(FULL_SERIES, grid.batch_size[-1])

    def test_nax_defaults_take_the_run_seed(self):
        """
        GIVEN the shipped configuration
        WHEN the default network settings are built
        THEN they carry the run seed
        """
        nax_config = self.config.nax_defaults()

        self.assertEqual(20190101, nax_config.seed)
        self.assertEqual(3, nax_config.neurons)
        self.assertEqual(0.003, nax_config.learning_rate)

    def test_bootstrap_config(self):
        """
        GIVEN the shipped configuration
        WHEN the bootstrap settings are built
        THEN blocks average 7 days with a half range of 3 and 2000 paths are drawn from the training years
        """
        bootstrap = self.config.bootstrap_config()

        self.assertEqual((7, 3, 2000, ()), (bootstrap.mean_block_length, bootstrap.half_range, bootstrap.paths,
                                            bootstrap.source_years))
        self.assertEqual(20190101, bootstrap.seed)

    def test_no_data_configured(self):
        """
        GIVEN the shipped configuration, which names no data files
        WHEN the data paths are read
        THEN a ConfigException is raised
        """
        self.assertRaises(ConfigException, self.config.data_paths)


class RunConfigTest(unittest.TestCase):

    def test_overrides_win(self):
        """
        GIVEN a config file and an override of one of its settings
        WHEN the setting is read
        THEN the override's value is returned
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "seed: 1\nworkers: 2\n")

            config = RunConfig(path, {"seed": 5})

            self.assertEqual(5, config.seed())
            self.assertEqual(2, config.workers())

    def test_nested_and_dotted_keys(self):
        """
        GIVEN a config file mixing nested mappings and dotted key names
        WHEN settings are read
        THEN both are available under dotted names
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "seed: 1\nnax:\n  neurons: 5\nnax.l2: 0.0\n")

            config = RunConfig(path)

            self.assertEqual(5, config.get("nax.neurons"))
            self.assertEqual(0.0, config.get("nax.l2"))

    def test_relative_paths(self):
        """
        GIVEN a relative data path that exists next to the config file
        WHEN the data paths are read
        THEN the path is resolved against the config file's directory
        """
        with tempfile.TemporaryDirectory() as tmp:
            (Path(tmp) / "daily.csv").write_text("date\n", encoding="utf-8")
            path = write_config(tmp, "seed: 1\ndata.daily: daily.csv\n")

            paths = RunConfig(path).data_paths()

            self.assertEqual(Path(tmp).absolute() / "daily.csv", paths["daily"])
            self.assertIsNone(paths["hourly"])

    def test_missing_data_file(self):
        """
        GIVEN a data path that doesn't exist
        WHEN the data paths are read
        THEN a ConfigException naming the setting is raised
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "seed: 1\ndata.hourly: nowhere.csv\n")

            with self.assertRaisesRegex(ConfigException, "data.hourly"):
                RunConfig(path).data_paths()

    def test_missing_seed(self):
        """
        GIVEN a config without a seed
        WHEN the seed is read
        THEN a ConfigException is raised
        """
        with tempfile.TemporaryDirectory() as tmp:
            self.assertRaises(ConfigException, RunConfig(write_config(tmp, "workers: 1\n")).seed)

    def test_invalid_segmentation(self):
        """
        GIVEN a validation year inside the calibration window
        WHEN the segmentation is built
        THEN a ConfigException is raised
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(
                tmp, "seed: 1\nsegmentation.calibration: 2007/2010\nsegmentation.validation: 2010\n"
                     "segmentation.test: 2012\n")

            self.assertRaises(ConfigException, RunConfig(path).segmentation)

    def test_unreadable_file(self):
        """
        GIVEN a config path that doesn't exist
        WHEN a setting is read
        THEN a ConfigException is raised
        """
        self.assertRaises(ConfigException, RunConfig("/nonexistent/config.yml").get, "seed")

    def test_invalid_grid(self):
        """
        GIVEN an unknown activation in the grid
        WHEN the grid is built
        THEN a ConfigException is raised
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "seed: 1\ngrid.activation: [relu]\n")

            self.assertRaises(ConfigException, RunConfig(path).grid_spec)

    def test_resolved_is_sorted(self):
        """
        GIVEN a config file and an override
        WHEN the resolved settings are read
        THEN they're the merged settings in key order
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "workers: 1\nseed: 1\n")

            self.assertEqual([("seed", 2), ("workers", 1)], list(RunConfig(path, {"seed": 2}).resolved().items()))


def test_robustness_optional():
    with tempfile.TemporaryDirectory() as tmp:
        path = write_config(
            tmp, "seed: 1\nsegmentation.calibration: 2007/2010\nsegmentation.validation: 2011\n"
                 "segmentation.test: 2012\n")

        assert RunConfig(path).segmentation().robustness == []
