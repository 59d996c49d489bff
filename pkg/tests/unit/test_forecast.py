import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy import integrate, stats

from nax_forecast.core.exceptions import ForecastError
from nax_forecast.core.models import DAYS_IN_YEAR
from nax_forecast.core.models.density import BootstrapConfig, MixtureDay, TemperaturePath
from nax_forecast.core.models.nax import NaxConfig
from nax_forecast.core.models.records import CONSUMPTION, DRY_BULB, WET_BULB
from nax_forecast.core.models.segmentation import DateRange
from nax_forecast.core.serialisation import write_csv
from nax_forecast.features import day_of_year
from nax_forecast.forecast import (
    REPORTED_QUANTILES, bootstrap_temperatures, calendar_frame, density_slices, forecast_exante, forecast_expost,
    forecast_frame, mixture_quantile, mixture_quantiles, paths_frame, quantile_table, read_forecast,
)
from nax_forecast.pipeline import fit_model, oos_days, prepare
from nax_forecast.synthetic import SyntheticConfig, generate_synthetic

TRAINING_YEARS = DateRange.for_years(2007, 2009)
HORIZON_YEAR = DateRange.for_years(2010)


class TrainedModelTestCase(unittest.TestCase):
    """Trains one small network on 2007-2009 of synthetic data, to forecast 2010"""

    @classmethod
    def setUpClass(cls):
        synthetic = generate_synthetic(SyntheticConfig(start="2007-01-01", end="2010-12-31"), seed=21)
        cls.prepared = prepare(synthetic.daily)
        config = NaxConfig(neurons=3, learning_rate=0.01, batch_size=50, epochs=5, seed=2)
        cls.model = fit_model(cls.prepared, TRAINING_YEARS, config)
        cls.horizon = oos_days(cls.prepared, HORIZON_YEAR)
        cls.history = cls.prepared.daily.loc[cls.prepared.daily.index.year < 2010, [DRY_BULB, WET_BULB]]


class BootstrapTest(TrainedModelTestCase):

    def test_block_structure(self):
        """
        GIVEN 2000 paths with mean block length 7 and half range 3
        WHEN temperatures are bootstrapped over a year
        THEN blocks tile the horizon, lengths span 4-10, shifts span -3..3 and sources are the configured years
        """
        config = BootstrapConfig(paths=2000, source_years=(2007, 2008, 2009), seed=5)

        paths = bootstrap_temperatures(self.history, self.horizon.days.index, config)

        self.assertEqual(2000, len(paths))
        blocks = [b for p in paths for b in p.blocks]
        self.assertEqual(set(range(4, 11)), {b.length for b in blocks})
        self.assertEqual(set(range(-3, 4)), {b.shift for b in blocks})
        self.assertEqual({2007, 2008, 2009}, {b.source_year for b in blocks})
        self.assertAlmostEqual(7.0, np.mean([b.length for b in blocks]), delta=0.1)
        for path in paths:
            self.assertEqual(DAYS_IN_YEAR, len(path))
            starts = [b.start for b in path.blocks]
            self.assertEqual(0, starts[0])
            self.assertEqual([b.start + b.length for b in path.blocks[:-1]], starts[1:])

    def test_no_shift_single_year_retiles_history(self):
        """
        GIVEN a half range of 0 and a single source year
        WHEN temperatures are bootstrapped over a whole year
        THEN every path is that year's temperatures day for day, whatever the block boundaries
        """
        config = BootstrapConfig(mean_block_length=5, half_range=0, paths=4, source_years=(2008,), seed=3)

        paths = bootstrap_temperatures(self.history, self.horizon.days.index, config)

        source = self.history.loc["2008"]
        for path in paths:
            np.testing.assert_array_equal(source[DRY_BULB].to_numpy(), path.dry_bulb)
            np.testing.assert_array_equal(source[WET_BULB].to_numpy(), path.wet_bulb)
            self.assertEqual({5}, {b.length for b in path.blocks})

    def test_values_trace_back_to_history(self):
        """
        GIVEN bootstrapped paths
        WHEN each block's values are looked up in its source year at the shifted day-of-year
        THEN they match the path
        """
        config = BootstrapConfig(paths=50, source_years=(2007, 2008, 2009), seed=6)
        horizon_doy = day_of_year(self.horizon.days.index)
        by_year = {}
        for year in config.source_years:
            rows = self.history[self.history.index.year == year]
            by_year[year] = rows.to_numpy()[np.argsort(day_of_year(rows.index))]

        for path in bootstrap_temperatures(self.history, self.horizon.days.index, config):
            for block in path.blocks:
                covered = min(block.length, len(path) - block.start)
                days = slice(block.start, block.start + covered)
                source_days = (horizon_doy[days] + block.shift) % DAYS_IN_YEAR
                self.assertEqual(source_days[0], block.source_day)
                np.testing.assert_array_equal(by_year[block.source_year][source_days, 0], path.dry_bulb[days])
                np.testing.assert_array_equal(by_year[block.source_year][source_days, 1], path.wet_bulb[days])

    def test_paths_depend_only_on_seed_and_index(self):
        """
        GIVEN the same seed
        WHEN 5 and then 10 paths are drawn
        THEN the first 5 paths are identical
        """
        five = bootstrap_temperatures(
            self.history, self.horizon.days.index, BootstrapConfig(paths=5, source_years=(2008, 2009), seed=1))
        ten = bootstrap_temperatures(
            self.history, self.horizon.days.index, BootstrapConfig(paths=10, source_years=(2008, 2009), seed=1))

        for a, b in zip(five, ten):
            np.testing.assert_array_equal(a.dry_bulb, b.dry_bulb)
            self.assertEqual(a.blocks, b.blocks)

    def test_gaps_are_avoided(self):
        """
        GIVEN a source year missing three days of March
        WHEN paths are bootstrapped
        THEN every value is finite
        """
        history = self.history.drop(index=pd.date_range("2009-03-10", "2009-03-12"))
        config = BootstrapConfig(paths=20, source_years=(2008, 2009), seed=2)

        paths = bootstrap_temperatures(history, self.horizon.days.index, config)

        self.assertTrue(all(np.isfinite(p.dry_bulb).all() for p in paths))

    def test_unknown_source_year(self):
        """
        GIVEN a source year with no history
        WHEN paths are bootstrapped
        THEN a ForecastError is raised
        """
        config = BootstrapConfig(paths=2, source_years=(2001,))

        self.assertRaises(ForecastError, bootstrap_temperatures, self.history, self.horizon.days.index, config)

    def test_paths_frame(self):
        """
        GIVEN bootstrapped paths
        WHEN their provenance table is built
        THEN there's a row per block and each path's rows cover the horizon
        """
        paths = bootstrap_temperatures(
            self.history, self.horizon.days.index, BootstrapConfig(paths=3, source_years=(2009,), seed=3))

        frame = paths_frame(paths, self.horizon.days.index)

        self.assertEqual(sum(len(p.blocks) for p in paths), len(frame))
        np.testing.assert_array_equal([DAYS_IN_YEAR] * 3, frame.groupby("path_id")["days"].sum())
        self.assertEqual("2010-01-01", frame["start_date"].iloc[0])


class ForecastTest(TrainedModelTestCase):

    def test_one_path_ex_ante_equals_ex_post(self):
        """
        GIVEN a single temperature path equal to the realised temperatures
        WHEN an ex-ante forecast is made with it
        THEN it's bit-for-bit the ex-post forecast
        """
        days = self.horizon.days
        path = TemperaturePath(days[DRY_BULB].to_numpy(), days[WET_BULB].to_numpy())

        _, exante = forecast_exante(self.model, [path], calendar_frame(days))
        expost = forecast_expost(self.model, days)

        np.testing.assert_array_equal(expost.mean_log, exante.mean_log)
        np.testing.assert_array_equal(expost.sigma_log, exante.sigma_log)
        np.testing.assert_array_equal(expost.point_gwh, exante.point_gwh)

    def test_mixture_summary(self):
        """
        GIVEN several bootstrapped paths
        WHEN an ex-ante forecast is made
        THEN the summary mean is the mean of the component means, the variance follows the law of total variance, and
        the point forecast is the mixture median
        """
        paths = bootstrap_temperatures(
            self.history, self.horizon.days.index, BootstrapConfig(paths=25, source_years=(2007, 2008, 2009), seed=4))

        mixture, forecast = forecast_exante(self.model, paths, calendar_frame(self.horizon.days))

        self.assertEqual((DAYS_IN_YEAR, 25), mixture.mu.shape)
        np.testing.assert_allclose(mixture.mu.mean(axis=1), forecast.mean_log)
        np.testing.assert_allclose(
            np.mean(mixture.sigma ** 2, axis=1) + np.var(mixture.mu, axis=1), forecast.sigma_log ** 2, rtol=1e-12)
        self.assertTrue((forecast.sigma_log ** 2 >= np.mean(mixture.sigma ** 2, axis=1)).all())
        median_cdf = stats.norm.cdf((np.log(forecast.point_gwh)[:, None] - mixture.mu) / mixture.sigma).mean(axis=1)
        np.testing.assert_allclose(np.full(DAYS_IN_YEAR, 0.5), median_cdf, atol=1e-9)

    def test_ex_ante_intervals_are_wider_than_ex_post(self):
        """
        GIVEN a pool of bootstrapped paths that also holds the realised temperatures
        WHEN ex-ante and ex-post forecasts are made for the same year
        THEN the ex-ante 95% intervals are at least as wide on average as the ex-post ones
        """
        days = self.horizon.days
        realised = TemperaturePath(days[DRY_BULB].to_numpy(), days[WET_BULB].to_numpy())
        pool = [realised] + bootstrap_temperatures(
            self.history, days.index, BootstrapConfig(paths=24, source_years=(2007, 2008, 2009), seed=6))

        _, exante = forecast_exante(self.model, pool, calendar_frame(days))
        expost = forecast_expost(self.model, days)

        exante_bounds = quantile_table(exante, [0.025, 0.975])
        expost_bounds = quantile_table(expost, [0.025, 0.975])
        self.assertGreaterEqual(np.mean(np.diff(exante_bounds, axis=1)), np.mean(np.diff(expost_bounds, axis=1)))

    def test_consumption_is_rejected(self):
        """
        GIVEN out-of-sample inputs that still carry consumption
        WHEN a forecast is made
        THEN a ForecastError is raised
        """
        days = self.horizon.days.assign(**{CONSUMPTION: self.horizon.realized})

        self.assertRaises(ForecastError, forecast_expost, self.model, days)

    def test_horizon_must_follow_training(self):
        """
        GIVEN a horizon starting five days after the training window ends
        WHEN a forecast is made
        THEN a ForecastError is raised
        """
        self.assertRaises(ForecastError, forecast_expost, self.model, self.horizon.days.iloc[5:])

    def test_forecast_frame(self):
        """
        GIVEN an ex-post forecast
        WHEN it's tabulated
        THEN the quantile columns increase across the row and the median column is the point forecast
        """
        forecast = forecast_expost(self.model, self.horizon.days)

        frame = forecast_frame(forecast)

        quantile_columns = [f"q{q:02d}" for q in REPORTED_QUANTILES]
        self.assertEqual(["date", "point_gwh", "sigma_log"] + quantile_columns, list(frame.columns))
        self.assertTrue((np.diff(frame[quantile_columns].to_numpy(), axis=1) > 0).all())
        np.testing.assert_allclose(frame["point_gwh"], frame["q50"], rtol=1e-12)

    def test_density_slices(self):
        """
        GIVEN an ex-post forecast of 2010
        WHEN the density slices are tabulated
        THEN each of the four slice dates has a CDF rising to about 1 and a density integrating to about 1
        """
        slices = density_slices(forecast_expost(self.model, self.horizon.days))

        self.assertEqual(["2010-01-15", "2010-04-15", "2010-07-15", "2010-10-15"], list(slices["date"].unique()))
        for _, rows in slices.groupby("date"):
            self.assertTrue((np.diff(rows["cdf"]) >= 0).all())
            self.assertAlmostEqual(1.0, rows["cdf"].iloc[-1], delta=1e-3)
            self.assertAlmostEqual(1.0, integrate.trapezoid(rows["pdf"], rows["consumption_gwh"]), delta=1e-3)

    def test_read_written_forecast(self):
        """
        GIVEN an ex-ante forecast written as forecast.csv and mixture.csv
        WHEN it's read back, with and without the mixture file
        THEN the mixture is restored, and without it the Gaussian of the forecast file is returned
        """
        paths = bootstrap_temperatures(
            self.history, self.horizon.days.index, BootstrapConfig(paths=4, source_years=(2009,), seed=8))
        mixture, forecast = forecast_exante(self.model, paths, calendar_frame(self.horizon.days))

        with tempfile.TemporaryDirectory() as tmp:
            forecast_csv, mixture_csv = Path(tmp) / "forecast.csv", Path(tmp) / "mixture.csv"
            write_csv(forecast_frame(forecast), forecast_csv)
            write_csv(mixture.to_frame(), mixture_csv)

            restored = read_forecast(forecast_csv, mixture_csv)
            gaussian = read_forecast(forecast_csv)

        self.assertTrue(restored.is_mixture)
        np.testing.assert_allclose(forecast.mean_log, restored.mean_log, rtol=1e-8)
        np.testing.assert_allclose(forecast.point_gwh, restored.point_gwh, rtol=1e-8)
        self.assertFalse(gaussian.is_mixture)
        np.testing.assert_allclose(forecast.point_gwh, gaussian.point_gwh, rtol=1e-8)
        np.testing.assert_allclose(forecast.sigma_log, gaussian.sigma_log, rtol=1e-8)

    def test_read_missing_forecast(self):
        """
        GIVEN a forecast path that doesn't exist
        WHEN it's read
        THEN a ForecastError is raised
        """
        self.assertRaises(ForecastError, read_forecast, Path("/nonexistent/forecast.csv"))


class MixtureQuantileTest(unittest.TestCase):

    def test_symmetric_mixture_median(self):
        """
        GIVEN two equal-width components centred on 0 and 3
        WHEN the median is taken
        THEN it's 1.5
        """
        self.assertAlmostEqual(1.5, mixture_quantile(MixtureDay(np.array([0.0, 3.0]), np.ones(2)), 0.5), places=10)

    def test_single_component(self):
        """
        GIVEN a one-component mixture
        WHEN its 95% quantile is taken
        THEN it's the Gaussian quantile
        """
        day = MixtureDay(np.array([2.0]), np.array([0.5]))

        self.assertAlmostEqual(stats.norm.ppf(0.95, 2.0, 0.5), mixture_quantile(day, 0.95))

    def test_cdf_at_quantile(self):
        """
        GIVEN random mixtures
        WHEN quantiles at several levels are taken
        THEN the mixture CDF at each quantile is the level
        """
        rng = np.random.default_rng(3)
        mu = rng.normal(size=(20, 30))
        sigma = rng.uniform(0.05, 1.0, size=(20, 30))

        for level in (0.01, 0.25, 0.5, 0.9, 0.99):
            quantiles = mixture_quantiles(mu, sigma, level)
            cdf = stats.norm.cdf((quantiles[:, None] - mu) / sigma).mean(axis=1)
            self.assertLess(np.abs(cdf - level).max(), 1e-10)

    def test_step_like_mixture_terminates(self):
        """
        GIVEN two components far narrower than the float spacing at their location
        WHEN a quantile between their masses is taken
        THEN bisection stops at float resolution with a quantile between the two means
        """
        day = MixtureDay(np.array([1e6, 1e6 + 1e-9]), np.full(2, 1e-15))

        quantile = mixture_quantile(day, 0.25)

        self.assertGreaterEqual(quantile, 1e6 - 1e-9)
        self.assertLessEqual(quantile, 1e6 + 2e-9)


@pytest.mark.parametrize("level", [0.0, 1.0, -0.5])
def test_mixture_quantile_level(level):
    pytest.raises(ForecastError, mixture_quantiles, np.zeros((1, 2)), np.ones((1, 2)), level)
