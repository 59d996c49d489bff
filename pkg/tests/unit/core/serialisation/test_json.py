import json
import tempfile
import unittest
from datetime import date, datetime
from pathlib import Path

import numpy as np
import pandas as pd

from nax_forecast.core.models.segmentation import DateRange
from nax_forecast.core.serialisation import dumps, read_json, write_csv, write_json


class NaxJsonEncoderTest(unittest.TestCase):

    def test_encodes_numpy_and_dates(self):
        """
        GIVEN a structure holding numpy scalars and arrays, dates and a model object
        WHEN it's dumped
        THEN everything is converted to plain JSON types
        """
        obj = {
            "array": np.array([1.5, 2.0]),
            "int": np.int64(3),
            "float": np.float32(0.5),
            "flag": np.bool_(True),
            "date": date(2012, 1, 31),
            "datetime": datetime(2012, 1, 31, 6, 0),
            "timestamp": pd.Timestamp("2012-02-01 13:00"),
            "range": DateRange.for_years(2012),
            "path": Path("/tmp/x.csv"),
        }

        decoded = json.loads(dumps(obj))

        self.assertEqual({
            "array": [1.5, 2.0],
            "int": 3,
            "float": 0.5,
            "flag": True,
            "date": "2012-01-31",
            "datetime": "2012-01-31T06:00:00",
            "timestamp": "2012-02-01",
            "range": {"start": "2012-01-01", "end": "2012-12-31"},
            "path": "/tmp/x.csv",
        }, decoded)

    def test_unknown_type(self):
        """
        GIVEN an object with no JSON conversion
        WHEN it's dumped
        THEN a TypeError is raised
        """
        self.assertRaises(TypeError, dumps, {"x": object()})

    def test_stable_output(self):
        """
        GIVEN two dicts with the same content in different insertion orders
        WHEN they're dumped
        THEN the output is identical
        """
        self.assertEqual(dumps({"a": 1, "b": 2}), dumps({"b": 2, "a": 1}))


class FileWritingTest(unittest.TestCase):

    def test_json_file_round_trip(self):
        """
        GIVEN a DateRange written to a JSON file
        WHEN the file is read back
        THEN it converts back to the same DateRange
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "range.json"
            write_json(DateRange.for_years(2011), path)

            self.assertEqual(DateRange.for_years(2011), DateRange.from_json(read_json(path)))

    def test_csv_float_format(self):
        """
        GIVEN a frame of floats
        WHEN it's written as CSV
        THEN floats carry 10 significant digits and there's no index column
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.csv"
            write_csv(pd.DataFrame({"x": [1 / 3, 2.0]}), path)

            self.assertEqual("x\n0.3333333333\n2\n", path.read_text(encoding="utf-8"))
