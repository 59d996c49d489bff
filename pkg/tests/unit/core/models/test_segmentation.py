import unittest
from datetime import date

import pytest

from nax_forecast.core.exceptions import InvalidNaxJsonError
from nax_forecast.core.models.segmentation import DateRange, Segmentation


class DateRangeTest(unittest.TestCase):

    def test_trailing_whole_years(self):
        """
        GIVEN a forecast period starting on Jan 1
        WHEN DateRange.trailing is called for 3 years
        THEN the window covers the three calendar years before it, ending the day before
        """
        window = DateRange.trailing(date(2012, 1, 1), 3)

        self.assertEqual(DateRange(date(2009, 1, 1), date(2011, 12, 31)), window)

    def test_trailing_rejects_zero_years(self):
        """
        GIVEN a window length of 0 years
        WHEN DateRange.trailing is called
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, DateRange.trailing, date(2012, 1, 1), 0)

    def test_start_after_end(self):
        """
        GIVEN a start date after the end date
        WHEN a DateRange is created
        THEN a ValueError is raised
        """
        self.assertRaises(ValueError, DateRange, date(2012, 1, 2), date(2012, 1, 1))

    def test_split_years_clips_to_range(self):
        """
        GIVEN a range starting and ending mid-year
        WHEN split_years is called
        THEN there's one range per calendar year, clipped to the original range
        """
        ranges = DateRange(date(2013, 7, 1), date(2015, 3, 31)).split_years()

        self.assertEqual(
            [DateRange(date(2013, 7, 1), date(2013, 12, 31)),
             DateRange(date(2014, 1, 1), date(2014, 12, 31)),
             DateRange(date(2015, 1, 1), date(2015, 3, 31))],
            ranges)

    def test_contains_is_inclusive(self):
        """
        GIVEN a DateRange
        WHEN contains is called with its first and last dates
        THEN both are contained
        """
        window = DateRange.for_years(2011)

        self.assertTrue(window.contains(date(2011, 1, 1)))
        self.assertTrue(window.contains(date(2011, 12, 31)))
        self.assertFalse(window.contains(date(2012, 1, 1)))

    def test_json_round_trip(self):
        """
        GIVEN a DateRange
        WHEN it's converted to JSON and back
        THEN the result equals the original
        """
        window = DateRange(date(2007, 1, 1), date(2010, 12, 31))

        self.assertEqual(window, DateRange.from_json(window.to_json()))

    def test_from_json_unexpected_key(self):
        """
        GIVEN a JSON dict with a key DateRange doesn't know about
        WHEN from_json is called
        THEN an InvalidNaxJsonError is raised
        """
        json_dict = {"start": "2007-01-01", "end": "2007-12-31", "step": "P1D"}

        self.assertRaises(InvalidNaxJsonError, DateRange.from_json, json_dict)


@pytest.mark.parametrize("str_range, expected", [
    ("2011", DateRange(date(2011, 1, 1), date(2011, 12, 31))),
    (2011, DateRange(date(2011, 1, 1), date(2011, 12, 31))),
    ("2013/2016", DateRange(date(2013, 1, 1), date(2016, 12, 31))),
    ("2007-01-01/2010-12-31", DateRange(date(2007, 1, 1), date(2010, 12, 31))),
    (" 2012-03-01 / 2012-06-30 ", DateRange(date(2012, 3, 1), date(2012, 6, 30))),
])
def test_daterange_parse_str(str_range, expected):
    assert DateRange.parse_str(str_range) == expected


@pytest.mark.parametrize("str_range", ["2011/2012/2013", "not-a-date", "2012-02-30/2012-03-01"])
def test_daterange_parse_str_invalid(str_range):
    pytest.raises(ValueError, DateRange.parse_str, str_range)


class SegmentationTest(unittest.TestCase):

    def test_overlapping_windows_rejected(self):
        """
        GIVEN a validation window that overlaps the calibration window
        WHEN a Segmentation is created
        THEN a ValueError is raised
        """
        self.assertRaises(
            ValueError, Segmentation,
            DateRange.for_years(2007, 2010), DateRange.for_years(2010), DateRange.for_years(2012))

    def test_unordered_windows_rejected(self):
        """
        GIVEN a test window before the validation window
        WHEN a Segmentation is created
        THEN a ValueError is raised
        """
        self.assertRaises(
            ValueError, Segmentation,
            DateRange.for_years(2007, 2010), DateRange.for_years(2012), DateRange.for_years(2011))

    def test_json_round_trip(self):
        """
        GIVEN a Segmentation with robustness years
        WHEN it's converted to JSON and back
        THEN the result equals the original
        """
        segmentation = Segmentation(
            DateRange.for_years(2007, 2010), DateRange.for_years(2011), DateRange.for_years(2012),
            DateRange.for_years(2013, 2016).split_years())

        self.assertEqual(segmentation, Segmentation.from_json(segmentation.to_json()))
