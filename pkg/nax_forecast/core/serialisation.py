import json
from datetime import date, datetime
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

from .models import NaxModel

# Tabular outputs are written with this float format so reruns produce byte-identical files
CSV_FLOAT_FORMAT = "%.10g"


def json_encode_date(d: Union[date, datetime]) -> str:
    # Naive datetimes are encoded without a timezone designator; the pipeline only deals in calendar dates.
    return d.isoformat()


class NaxJsonEncoder(json.JSONEncoder):

    def default(self, obj: Any) -> Any:
        """Return a JSON encodable version of objects that can't otherwise be serialised, or raise a TypeError"""
        if isinstance(obj, pd.Timestamp):
            return json_encode_date(obj.date())
        elif isinstance(obj, (date, datetime)):
            return json_encode_date(obj)
        elif isinstance(obj, NaxModel):
            return obj.to_json()
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, Path):
            return str(obj)
        else:
            return super().default(obj)


def dumps(obj: Any) -> str:
    return json.dumps(obj, cls=NaxJsonEncoder, indent=2, sort_keys=True)


def write_json(obj: Any, path: Path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def read_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False):
    frame.to_csv(path, index=index, float_format=CSV_FLOAT_FORMAT, encoding="utf-8", lineterminator="\n")
