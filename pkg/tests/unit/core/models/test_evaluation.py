import unittest

import numpy as np
import pytest

from nax_forecast.core.models import PERCENTILES
from nax_forecast.core.models.evaluation import CoverageTest, EvalReport, ViolationSeries


@pytest.mark.parametrize("statistic, threshold, expected", [
    (3.83, 3.84, False),
    (3.84, 3.84, False),
    (3.85, 3.84, True),
    (5.98, 5.99, False),
    (6.00, 5.99, True),
])
def test_coveragetest_reject(statistic, threshold, expected):
    assert CoverageTest(statistic, threshold).reject is expected


class ViolationSeriesTest(unittest.TestCase):

    def test_count(self):
        """
        GIVEN a violation indicator series
        WHEN it's counted
        THEN the number of violations is returned
        """
        series = ViolationSeries(0.95, [0, 1, 0, 0, 1])

        self.assertEqual(2, series.count)
        self.assertEqual(5, len(series))

    def test_invalid_alpha(self):
        """
        GIVEN a confidence level of 1
        WHEN a ViolationSeries is created
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, ViolationSeries, 1.0, [0, 1])

    def test_non_indicator_values(self):
        """
        GIVEN a series containing a 2
        WHEN a ViolationSeries is created
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, ViolationSeries, 0.9, [0, 2])


class EvalReportTest(unittest.TestCase):

    def report(self, **kwargs):
        defaults = dict(
            rmse=6.5, mape=1.8, pinball=np.linspace(0.2, 2.0, len(PERCENTILES)),
            coverage={0.5: 0.49, 0.95: 0.96}, uc=CoverageTest(0.5, 3.84), cc=CoverageTest(7.1, 5.99),
            violations_95=15, days=365)
        defaults.update(kwargs)
        return EvalReport(**defaults)

    def test_apl_is_mean_pinball(self):
        """
        GIVEN pinball losses at every percentile
        WHEN an EvalReport is created
        THEN the average pinball loss is their mean
        """
        report = self.report()

        self.assertAlmostEqual(1.1, report.apl)

    def test_inconsistent_apl_rejected(self):
        """
        GIVEN an average pinball loss that isn't the mean of the pinball losses
        WHEN an EvalReport is created
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, self.report, apl=5.0)

    def test_pinball_length(self):
        """
        GIVEN only 98 pinball values
        WHEN an EvalReport is created
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, self.report, pinball=np.ones(98))

    def test_coverage_95(self):
        """
        GIVEN 15 violations in 365 days
        WHEN the 95% coverage is read
        THEN it's 350 / 365
        """
        self.assertAlmostEqual(350 / 365, self.report().coverage_95)

    def test_json_round_trip(self):
        """
        GIVEN an EvalReport
        WHEN it's converted to JSON and back
        THEN every field is preserved and the test decisions are included in the JSON
        """
        report = self.report()

        json_dict = report.to_json()
        restored = EvalReport.from_json(json_dict)

        self.assertEqual({"statistic": 7.1, "threshold": 5.99, "reject": True}, json_dict["cc"])
        self.assertEqual(0.96, json_dict["coverage"]["0.95"])
        np.testing.assert_allclose(report.pinball, restored.pinball)
        self.assertEqual(report.coverage, restored.coverage)
        self.assertEqual(report.uc, restored.uc)
        self.assertEqual(report.cc, restored.cc)
        self.assertEqual((report.rmse, report.mape, report.apl, report.violations_95, report.days),
                         (restored.rmse, restored.mape, restored.apl, restored.violations_95, restored.days))
