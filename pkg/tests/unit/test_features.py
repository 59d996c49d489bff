import unittest
from datetime import date

import numpy as np
import pandas as pd
import pytest

from nax_forecast.core.exceptions import FeatureError
from nax_forecast.core.models import CALENDAR_COLUMNS, OMEGA
from nax_forecast.features import (
    INPUT_COLUMNS, calendar_features, calendar_matrix, day_of_year, fit_scaler, input_matrix, inverse_transform,
    leap_free_dates, transform, weather_matrix,
)
from nax_forecast.ingest import daily_frame


def make_days(n=10, start="2011-01-01", holidays=frozenset({date(2011, 1, 1)})):
    dates = pd.date_range(start, periods=n, freq="D")
    return daily_frame(dates, np.full(n, 300.0), 30.0 + np.arange(n), 25.0 + np.arange(n), holidays)


class CalendarFeaturesTest(unittest.TestCase):

    def test_new_years_day_2011(self):
        """
        GIVEN 1 January 2011, a Saturday and a holiday, at t = 0
        WHEN its calendar features are computed
        THEN the harmonics are at phase 0 and the Saturday and holiday dummies are set
        """
        features = calendar_features(date(2011, 1, 1), 0, frozenset({date(2011, 1, 1)}))

        self.assertEqual((0, 0.0, 1.0, 0.0, 1.0, 1, 0, 1), features.as_tuple())

    def test_harmonics_use_t(self):
        """
        GIVEN a day at t = 100
        WHEN its calendar features are computed
        THEN the harmonics are sin/cos of ωt and 2ωt with ω = 2π / 365
        """
        features = calendar_features(date(2011, 4, 11), 100)

        self.assertAlmostEqual(np.sin(2 * np.pi * 100 / 365), features.sin_1)
        self.assertAlmostEqual(np.cos(4 * np.pi * 100 / 365), features.cos_2)
        self.assertEqual((0, 0, 0), (features.d_sat, features.d_sun, features.d_hol))

    def test_matrix_matches_per_day_features(self):
        """
        GIVEN a daily frame
        WHEN its calendar matrix is built
        THEN each row equals that day's CalendarFeatures
        """
        days = make_days()
        t = np.arange(5, 15)

        matrix = calendar_matrix(days, t)

        expected = [calendar_features(ts.date(), i, frozenset({date(2011, 1, 1)})).as_tuple()
                    for ts, i in zip(days.index, t)]
        self.assertEqual((10, len(CALENDAR_COLUMNS)), matrix.shape)
        np.testing.assert_allclose(np.array(expected, dtype=float), matrix, atol=1e-15)

    def test_matrix_length_mismatch(self):
        """
        GIVEN fewer day indices than days
        WHEN the calendar matrix is built
        THEN a FeatureError is raised
        """
        self.assertRaises(FeatureError, calendar_matrix, make_days(), np.arange(9))


class InputMatrixTest(unittest.TestCase):

    def test_column_order(self):
        """
        GIVEN a daily frame
        WHEN the network inputs are built
        THEN the temperatures come first, then the calendar inputs
        """
        days = make_days()

        matrix = input_matrix(days, np.arange(10))

        self.assertEqual(len(INPUT_COLUMNS), matrix.shape[1])
        np.testing.assert_array_equal(days["dry_bulb"], matrix[:, 0])
        np.testing.assert_array_equal(days["wet_bulb"], matrix[:, 1])
        np.testing.assert_array_equal(np.arange(10), matrix[:, 2])

    def test_weather_override(self):
        """
        GIVEN a bootstrapped weather block
        WHEN the network inputs are built with it
        THEN it replaces the frame's temperatures
        """
        weather = np.column_stack([np.full(10, 70.0), np.full(10, 60.0)])

        matrix = input_matrix(make_days(), np.arange(10), weather)

        np.testing.assert_array_equal(weather, matrix[:, :2])

    def test_missing_weather(self):
        """
        GIVEN a day with a missing temperature
        WHEN the weather block is built
        THEN a FeatureError naming the day is raised
        """
        days = make_days()
        days.loc[days.index[3], "wet_bulb"] = np.nan

        with self.assertRaisesRegex(FeatureError, "2011-01-04"):
            weather_matrix(days)


class ScalerTest(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(0)
        self.training = rng.normal(size=(50, 3)) * [1.0, 10.0, 100.0]
        self.columns = ("a", "b", "c")

    def test_training_rows_map_into_unit_interval(self):
        """
        GIVEN a scaler fitted on training rows
        WHEN the training rows are transformed
        THEN every column spans exactly [0, 1]
        """
        scaler = fit_scaler(self.training, self.columns)

        scaled = transform(scaler, self.training)

        np.testing.assert_allclose(np.zeros(3), scaled.min(axis=0), atol=1e-15)
        np.testing.assert_allclose(np.ones(3), scaled.max(axis=0))

    def test_out_of_window_values_are_not_clipped(self):
        """
        GIVEN a value above the training maximum
        WHEN it's transformed
        THEN it maps above 1
        """
        scaler = fit_scaler(self.training, self.columns)

        scaled = transform(scaler, self.training.max(axis=0) + scaler.ranges)

        np.testing.assert_allclose([2.0, 2.0, 2.0], scaled)

    def test_inverse(self):
        """
        GIVEN scaled rows
        WHEN they're inverse transformed
        THEN the original rows are recovered
        """
        scaler = fit_scaler(self.training, self.columns)

        np.testing.assert_allclose(self.training, inverse_transform(scaler, transform(scaler, self.training)))

    def test_constant_column(self):
        """
        GIVEN a training block with a constant column
        WHEN a scaler is fitted
        THEN a FeatureError naming the column is raised
        """
        self.training[:, 1] = 4.0

        with self.assertRaisesRegex(FeatureError, "'b'"):
            fit_scaler(self.training, self.columns)

    def test_column_count(self):
        """
        GIVEN a matrix with a different number of columns to the scaler
        WHEN it's transformed
        THEN a FeatureError is raised
        """
        scaler = fit_scaler(self.training, self.columns)

        self.assertRaises(FeatureError, transform, scaler, self.training[:, :2])
        self.assertRaises(FeatureError, fit_scaler, self.training, ("a", "b"))


@pytest.mark.parametrize("day, expected", [
    ("2011-01-01", 0),
    ("2011-03-01", 59),
    ("2012-02-28", 58),
    ("2012-03-01", 59),
    ("2012-12-31", 364),
])
def test_day_of_year(day, expected):
    assert day_of_year(pd.DatetimeIndex([day]))[0] == expected


def test_leap_free_dates():
    dates = leap_free_dates(date(2012, 1, 1), date(2012, 12, 31))

    assert len(dates) == 365
    assert pd.Timestamp("2012-02-29") not in dates


def test_omega():
    assert OMEGA * 365 == pytest.approx(2 * np.pi)
