"""
Holiday calendars. A holiday file holds one ISO-8601 date per line; blank lines and lines starting with `#` are
ignored. Without a file, the bundled default covers the fixed-date US federal holidays.
"""
import logging
from datetime import date
from pathlib import Path
from typing import FrozenSet, Iterable, Union

import dateutil.parser
from dateutil.relativedelta import relativedelta, MO, TH

from nax_forecast.core.exceptions import IngestError

APP_LOGGER = logging.getLogger(__name__)

# (month, day, first year observed)
FIXED_DATE_HOLIDAYS = (
    (1, 1, None),  # New Year's Day
    (6, 19, 2021),  # Juneteenth
    (7, 4, None),  # Independence Day
    (11, 11, None),  # Veterans Day
    (12, 25, None),  # Christmas Day
)

# (month, relativedelta anchored on the first of that month)
FLOATING_HOLIDAYS = (
    (1, relativedelta(weekday=MO(+3))),  # Martin Luther King Jr. Day
    (2, relativedelta(weekday=MO(+3))),  # Washington's Birthday
    (5, relativedelta(day=31, weekday=MO(-1))),  # Memorial Day
    (9, relativedelta(weekday=MO(+1))),  # Labor Day
    (10, relativedelta(weekday=MO(+2))),  # Columbus Day
    (11, relativedelta(weekday=TH(+4))),  # Thanksgiving Day
)


def default_holidays(years: Iterable[int], include_floating: bool = False) -> FrozenSet[date]:
    holidays = set()
    for year in years:
        holidays.update(
            date(year, month, day) for month, day, since in FIXED_DATE_HOLIDAYS if since is None or year >= since)
        if include_floating:
            holidays.update(date(year, month, 1) + rule for month, rule in FLOATING_HOLIDAYS)
    return frozenset(holidays)


def load_holidays(path: Union[Path, str]) -> FrozenSet[date]:
    holidays = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                holidays.add(dateutil.parser.isoparse(line).date())
            except ValueError as err:
                raise IngestError(f"Unable to parse holiday date {line!r} in {path}: {err}", line_number)
    APP_LOGGER.debug(f"Loaded {len(holidays)} holidays from {path}")
    return frozenset(holidays)
